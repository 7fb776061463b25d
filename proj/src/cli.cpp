#include "vflux/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vflux/evalstats.hpp"
#include "vflux/flicker.hpp"
#include "vflux/manifest.hpp"
#include "vflux/recreate.hpp"
#include "vflux/rng.hpp"
#include "vflux/svg.hpp"
#include "vflux/vfi.hpp"
#include "vflux/waveform.hpp"

namespace vflux::cli {

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitParameter = 2;
constexpr int kExitValidation = 3;

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(detail::parse_double(tok));
    }
    if (out.empty()) throw ParameterError(std::string(what) + ": empty list");
    return out;
}

std::vector<Method> parse_method_list(const std::string& s) {
    std::vector<Method> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(parse_method(tok));
    }
    if (out.empty()) throw ParameterError("methods: empty list");
    return out;
}

void check_tw_list(const std::vector<double>& tws) {
    for (double t : tws) {
        if (!(t > 0.0)) throw ParameterError("t_w must be positive");
    }
}

WaveFormat resolve_format(const std::string& fmt, const fs::path& path) {
    if (fmt == "csv") return WaveFormat::csv;
    if (fmt == "raw") return WaveFormat::raw_f64;
    if (fmt == "auto") return guess_format(path);
    throw ParameterError("unknown format '" + fmt + "' (expected auto, csv or raw)");
}

int default_threads() {
    if (const char* env = std::getenv("VFLUX_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

fs::path ensure_out_dir(const std::string& out) {
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

const std::vector<double> kDefaultTw = {1, 10, 30, 60, 120, 300, 600};
const std::vector<double> kAllowedTw = {1, 10, 30, 60, 120, 300, 600};

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::string kind = "none";
    double amp = 0.0;
    double rate_cpm = 0.0;
    double freq = 0.0;
    double dur = 600.0;
    double un = 230.0;
    double carrier = 50.0;
    double rate = 20000.0;
    std::string format = "csv";
    std::string name = "signal";
    std::string out;
};

int cmd_synth(const SynthArgs& a) {
    ModulationSpec mod;
    if (a.kind == "none") mod.kind = ModulationKind::none;
    else if (a.kind == "rect") mod.kind = ModulationKind::rectangular;
    else if (a.kind == "sine") mod.kind = ModulationKind::sinusoidal;
    else if (a.kind == "ramp") mod.kind = ModulationKind::ramp;
    else throw ParameterError("unknown kind '" + a.kind + "'");
    mod.rel_amplitude = a.amp;
    mod.rate_cpm = mod.kind == ModulationKind::sinusoidal ? a.freq : a.rate_cpm;
    mod.duration_s = a.dur;

    const SampledWaveform w = synthesize_am(a.un, a.carrier, a.rate, mod);
    const fs::path dir = ensure_out_dir(a.out);
    const WaveFormat fmt = a.format == "raw" ? WaveFormat::raw_f64 : WaveFormat::csv;
    const fs::path file = dir / (a.name + (fmt == WaveFormat::csv ? ".csv" : ".raw"));
    save_waveform(w, file, fmt);

    RunManifest manifest("synth");
    manifest.set_config({{"kind", a.kind},
                         {"rel_amplitude", a.amp},
                         {"rate_cpm", a.rate_cpm},
                         {"freq_hz", a.freq},
                         {"duration_s", a.dur},
                         {"u_nominal", a.un},
                         {"carrier_hz", a.carrier},
                         {"rate", a.rate},
                         {"format", a.format},
                         {"name", a.name},
                         {"out", a.out}});
    manifest.add_output(file);
    manifest.write(dir / "manifest.json");
    std::cout << file.string() << "\n";
    return kExitOk;
}

// ---- vfi -----------------------------------------------------------------

struct VfiArgs {
    std::vector<std::string> inputs;
    std::string tw;
    std::string format = "auto";
    double sr_threshold = 0.01;
    std::string out;
};

int cmd_vfi(const VfiArgs& a) {
    const std::vector<double> tws = parse_double_list(a.tw, "tw");
    check_tw_list(tws);
    if (!(a.sr_threshold > 0.0)) throw ParameterError("sr-threshold must be positive");
    const fs::path dir = ensure_out_dir(a.out);

    RunManifest manifest("vfi");
    manifest.set_config({{"inputs", a.inputs},
                         {"tw", tws},
                         {"format", a.format},
                         {"sr_threshold_rel", a.sr_threshold},
                         {"out", a.out}});

    int failures = 0;
    for (const auto& input : a.inputs) {
        try {
            const fs::path in_path(input);
            const SampledWaveform w = load_waveform(in_path, resolve_format(a.format, in_path));
            manifest.add_input(in_path);
            const RmsSeries rms = compute_rms_series(w);
            const auto events = detect_changes(rms, w.u_nominal, a.sr_threshold);
            for (double t : tws) {
                const auto records = aggregate_vfi(rms, events, t);
                std::ostringstream name;
                name << in_path.stem().string() << "_tw" << detail::format_double(t) << ".csv";
                const fs::path out_file = dir / name.str();
                write_vfi_csv(out_file, records);
                manifest.add_output(out_file);
            }
        } catch (const std::exception& e) {
            std::cerr << "error: " << input << ": " << e.what() << "\n";
            ++failures;
        }
    }
    manifest.write(dir / "manifest.json");
    if (failures > 0) return kExitParameter;
    return kExitOk;
}

// ---- recreate --------------------------------------------------------------

struct RecreateArgs {
    std::string input;
    std::string method = "M1";
    std::uint64_t seed = 0;
    double tw = 0.0;
    std::string format = "auto";
    std::string emit_waveform; // "", "csv" or "raw"
    double un = 230.0;
    double carrier = 50.0;
    double rate = 20000.0;
    double sr_threshold = 0.01;
    double sr_const = 3.0;
    double gamma_shape = 1.0;
    double gamma_scale = 300.0;
    double min_speed = 0.01;
    std::string out;
};

bool looks_like_vfi_csv(const fs::path& path) {
    if (path.extension() != ".csv") return false;
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    return first.rfind("window_index,", 0) == 0;
}

int cmd_recreate(const RecreateArgs& a) {
    const Method method = parse_method(a.method);
    const fs::path in_path(a.input);
    if (!fs::exists(in_path)) throw FormatError(a.input + ": file does not exist");
    const fs::path dir = ensure_out_dir(a.out);

    std::vector<VfiRecord> records;
    double un = a.un, carrier = a.carrier, rate = a.rate;
    const bool from_vfi = looks_like_vfi_csv(in_path);
    if (from_vfi) {
        records = read_vfi_csv(in_path);
        if (records.empty()) throw FormatError(a.input + ": no records");
        for (const auto& r : records) {
            if (r.t_w != records.front().t_w) {
                throw ValidationError(a.input + ": records mix different t_w values");
            }
        }
    } else {
        if (!(a.tw > 0.0)) throw ParameterError("--tw is required for waveform input");
        const SampledWaveform w = load_waveform(in_path, resolve_format(a.format, in_path));
        un = w.u_nominal;
        carrier = w.carrier_hz;
        rate = w.rate;
        const RmsSeries rms = compute_rms_series(w);
        records = aggregate_vfi(rms, detect_changes(rms, w.u_nominal, a.sr_threshold), a.tw);
    }
    const double t_w = records.front().t_w;

    RecreationParams params;
    params.method = method;
    params.sr_const_rel = a.sr_const;
    params.gamma_shape = a.gamma_shape;
    params.gamma_scale = a.gamma_scale;
    params.min_speed_rel_un = a.min_speed;
    params.u_nominal = un;
    params.rms_dt = 1.0 / (2.0 * carrier);

    const std::string stem = in_path.stem().string();
    std::vector<std::pair<double, double>> points;
    std::vector<ClampWarning> warnings;
    SampledWaveform full;
    full.rate = rate;
    full.u_nominal = un;
    full.carrier_hz = carrier;

    for (const auto& rec : records) {
        params.seed = recreation_stream_key(a.seed, stem, t_w, method, rec.window_index);
        TrajectoryBuild build = build_trajectory(rec, params);
        const double offset = static_cast<double>(rec.window_index) * t_w;
        for (const auto& bp : build.trajectory.breakpoints) {
            points.emplace_back(offset + bp.t, bp.level);
        }
        warnings.insert(warnings.end(), build.warnings.begin(), build.warnings.end());
        if (!a.emit_waveform.empty()) {
            SampledWaveform win =
                synthesize_from_trajectory(build.trajectory, carrier, rate, un, offset);
            full.samples.insert(full.samples.end(), win.samples.begin(), win.samples.end());
        }
    }

    RunManifest manifest("recreate");
    manifest.set_config({{"input", a.input},
                         {"method", method_name(method)},
                         {"seed", a.seed},
                         {"t_w", t_w},
                         {"format", a.format},
                         {"emit_waveform", a.emit_waveform},
                         {"u_nominal", un},
                         {"carrier_hz", carrier},
                         {"rate", rate},
                         {"sr_threshold_rel", a.sr_threshold},
                         {"sr_const_rel", a.sr_const},
                         {"gamma_shape", a.gamma_shape},
                         {"gamma_scale", a.gamma_scale},
                         {"min_speed_rel_un", a.min_speed},
                         {"out", a.out}});
    manifest.add_input(in_path);

    const fs::path traj_file = dir / (stem + "_" + method_name(method) + "_trajectory.csv");
    write_trajectory_csv(traj_file, points);
    manifest.add_output(traj_file);
    const fs::path warn_file = dir / (stem + "_" + method_name(method) + "_warnings.csv");
    write_warnings_csv(warn_file, warnings);
    manifest.add_output(warn_file);
    if (!a.emit_waveform.empty()) {
        const bool raw = a.emit_waveform == "raw";
        const fs::path wave_file =
            dir / (stem + "_" + method_name(method) + (raw ? "_recreated.raw" : "_recreated.csv"));
        save_waveform(full, wave_file, raw ? WaveFormat::raw_f64 : WaveFormat::csv);
        manifest.add_output(wave_file);
    }
    manifest.write(dir / "manifest.json");
    return kExitOk;
}

// ---- flicker ---------------------------------------------------------------

struct FlickerArgs {
    std::string input;
    std::string format = "auto";
    double window = 0.0;
    bool pinst_csv = false;
    std::string out;
};

int cmd_flicker(const FlickerArgs& a) {
    const fs::path in_path(a.input);
    const SampledWaveform w = load_waveform(in_path, resolve_format(a.format, in_path));
    if (a.window <= 0.0 && w.duration_s() + 1e-9 < 600.0) {
        throw ParameterError(a.input + ": waveform shorter than 10 min (use --window to override)");
    }

    const PinstSeries pinst = compute_pinst(w);
    FlickerOptions opt;
    opt.window_s = a.window;
    const FlickerResult res = compute_pst(pinst, opt);

    const fs::path dir = ensure_out_dir(a.out);
    nlohmann::json doc;
    doc["p_st"] = res.p_st;
    doc["p_inst_max"] = pinst.max_after_settling();
    nlohmann::json pct = nlohmann::json::object();
    for (const auto& [k, v] : res.percentiles) {
        pct[detail::format_double(k)] = v;
    }
    doc["percentiles"] = pct;
    doc["settle_skip_s"] = pinst.settle_skip;
    doc["window_s"] = a.window > 0.0
                          ? a.window
                          : static_cast<double>(pinst.values.size() - pinst.settle_count()) *
                                pinst.dt;

    const fs::path json_file = dir / "flicker.json";
    {
        std::ofstream out_file(json_file, std::ios::binary);
        if (!out_file) throw FormatError(json_file.string() + ": cannot open for writing");
        out_file << doc.dump(2) << "\n";
    }

    RunManifest manifest("flicker");
    manifest.set_config({{"input", a.input},
                         {"format", a.format},
                         {"window_s", a.window},
                         {"pinst_csv", a.pinst_csv},
                         {"out", a.out}});
    manifest.add_input(in_path);
    manifest.add_output(json_file);

    if (a.pinst_csv) {
        const fs::path pinst_file = dir / "pinst.csv";
        std::ofstream pf(pinst_file, std::ios::binary);
        if (!pf) throw FormatError(pinst_file.string() + ": cannot open for writing");
        pf << "t_s,p_inst\n";
        for (std::size_t i = 0; i < pinst.values.size(); ++i) {
            pf << detail::format_double(static_cast<double>(i) * pinst.dt) << ','
               << detail::format_double(pinst.values[i]) << "\n";
        }
        manifest.add_output(pinst_file);
    }
    manifest.write(dir / "manifest.json");
    std::cout << "p_st=" << detail::format_double(res.p_st) << "\n";
    return kExitOk;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
    std::string dataset;
    std::string tw = "1,10,30,60,120,300,600";
    std::string methods = "M1,M2,M3";
    std::uint64_t seed = 0;
    int threads = 0;
    std::string format = "auto";
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    const fs::path data_dir(a.dataset);
    if (!fs::is_directory(data_dir)) {
        throw ParameterError(a.dataset + ": dataset directory does not exist");
    }

    EvalConfig cfg;
    cfg.t_w_list = parse_double_list(a.tw, "tw");
    check_tw_list(cfg.t_w_list);
    for (double t : cfg.t_w_list) {
        if (std::find(kAllowedTw.begin(), kAllowedTw.end(), t) == kAllowedTw.end()) {
            throw ParameterError("t_w=" + detail::format_double(t) +
                                 " not in the supported set {1,10,30,60,120,300,600}");
        }
    }
    cfg.methods = parse_method_list(a.methods);
    cfg.master_seed = a.seed;
    cfg.threads = a.threads > 0 ? a.threads : default_threads();

    std::vector<DatasetEntry> entries;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(data_dir)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension();
        if (ext == ".csv" || ext == ".raw") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        entries.push_back({f.stem().string(), [f, &a]() {
                               return load_waveform(f, resolve_format(a.format, f));
                           }});
    }
    if (entries.empty()) throw ParameterError(a.dataset + ": no .csv or .raw signals found");

    const EvalOutcome outcome = run_evaluation(entries, cfg);

    const fs::path dir = ensure_out_dir(a.out);
    RunManifest manifest("eval");
    manifest.set_config({{"dataset", a.dataset},
                         {"tw", cfg.t_w_list},
                         {"methods", a.methods},
                         {"master_seed", cfg.master_seed},
                         {"threads", cfg.threads},
                         {"format", a.format},
                         {"split_threshold", cfg.split_threshold},
                         {"sr_threshold_rel", cfg.sr_threshold_rel},
                         {"out", a.out}});
    for (const auto& f : files) manifest.add_input(f);

    const fs::path pairs_file = dir / "pairs.csv";
    write_pairs_csv(pairs_file, outcome.rows);
    manifest.add_output(pairs_file);
    const std::pair<const char*, const CoefficientTable*> tables[] = {
        {"coeff_all.csv", &outcome.all},
        {"coeff_pst_lt2.csv", &outcome.low},
        {"coeff_pst_ge2.csv", &outcome.high},
    };
    for (const auto& [name, table] : tables) {
        const fs::path f = dir / name;
        write_table_csv(f, *table);
        manifest.add_output(f);
    }

    for (double t : cfg.t_w_list) {
        for (Method m : cfg.methods) {
            ScatterPlot plot;
            plot.title = std::string("P_stc vs P_st, t_w=") + detail::format_double(t) + " s, " +
                         method_name(m);
            for (const auto& r : outcome.rows) {
                if (r.t_w == t && r.method == m) plot.points.emplace_back(r.p_st, r.p_stc);
            }
            std::ostringstream name;
            name << "scatter_tw" << detail::format_double(t) << "_" << method_name(m) << ".svg";
            const fs::path f = dir / name.str();
            write_scatter_svg(f, plot);
            manifest.add_output(f);
        }
    }

    for (const auto& fail : outcome.failures) {
        std::cerr << "error: " << fail.id << ": " << fail.error << "\n";
        manifest.add_note("failed: " + fail.id + ": " + fail.error);
    }
    manifest.write(dir / "manifest.json");
    return outcome.failures.empty() ? kExitOk : kExitPartial;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Voltage fluctuation toolkit: indices, recreation, flicker severity"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* sc_synth = app.add_subcommand("synth", "Generate an AM test waveform");
    sc_synth->add_option("--kind", synth.kind, "none|rect|sine|ramp")->capture_default_str();
    sc_synth->add_option("--amp", synth.amp, "relative amplitude dV/V (peak-to-peak)");
    sc_synth->add_option("--rate-cpm", synth.rate_cpm, "changes per minute (rect)");
    sc_synth->add_option("--freq", synth.freq, "modulation frequency Hz (sine)");
    sc_synth->add_option("--dur", synth.dur, "duration, s")->capture_default_str();
    sc_synth->add_option("--un", synth.un, "nominal rms voltage, V")->capture_default_str();
    sc_synth->add_option("--carrier", synth.carrier, "carrier frequency, Hz")->capture_default_str();
    sc_synth->add_option("--rate", synth.rate, "sampling rate, Hz")->capture_default_str();
    sc_synth->add_option("--format", synth.format, "csv|raw")->capture_default_str();
    sc_synth->add_option("--name", synth.name, "output stem")->capture_default_str();
    sc_synth->add_option("--out", synth.out, "output directory")->required();

    VfiArgs vfi;
    auto* sc_vfi = app.add_subcommand("vfi", "Measure voltage fluctuation indices");
    sc_vfi->add_option("--in", vfi.inputs, "input waveform files")->required();
    sc_vfi->add_option("--tw", vfi.tw, "comma-separated discrimination periods, s")->required();
    sc_vfi->add_option("--format", vfi.format, "auto|csv|raw")->capture_default_str();
    sc_vfi->add_option("--sr-threshold", vfi.sr_threshold, "speed threshold, fraction of U_N per s")
        ->capture_default_str();
    sc_vfi->add_option("--out", vfi.out, "output directory")->required();

    RecreateArgs rec;
    auto* sc_rec = app.add_subcommand("recreate", "Recreate a fluctuation trajectory from indices");
    sc_rec->add_option("--in", rec.input, "VFI csv or waveform file")->required();
    sc_rec->add_option("--method", rec.method, "M1|M2|M3")->required();
    sc_rec->add_option("--seed", rec.seed, "random seed")->capture_default_str();
    sc_rec->add_option("--tw", rec.tw, "discrimination period, s (waveform input)");
    sc_rec->add_option("--format", rec.format, "auto|csv|raw")->capture_default_str();
    sc_rec->add_option("--emit-waveform", rec.emit_waveform, "also synthesize: csv|raw");
    sc_rec->add_option("--un", rec.un, "nominal rms voltage (VFI input)")->capture_default_str();
    sc_rec->add_option("--carrier", rec.carrier, "carrier Hz (VFI input)")->capture_default_str();
    sc_rec->add_option("--rate", rec.rate, "sampling rate Hz (VFI input)")->capture_default_str();
    sc_rec->add_option("--sr-threshold", rec.sr_threshold, "detection threshold (waveform input)")
        ->capture_default_str();
    sc_rec->add_option("--sr-const", rec.sr_const, "M2 speed, delta_u per s")->capture_default_str();
    sc_rec->add_option("--gamma-shape", rec.gamma_shape, "M3 gamma shape")->capture_default_str();
    sc_rec->add_option("--gamma-scale", rec.gamma_scale, "M3 gamma scale, % delta_u per s")
        ->capture_default_str();
    sc_rec->add_option("--min-speed", rec.min_speed, "speed floor, fraction of U_N per s")
        ->capture_default_str();
    sc_rec->add_option("--out", rec.out, "output directory")->required();

    FlickerArgs flick;
    auto* sc_flick = app.add_subcommand("flicker", "Compute short-term flicker severity");
    sc_flick->add_option("--in", flick.input, "input waveform file")->required();
    sc_flick->add_option("--format", flick.format, "auto|csv|raw")->capture_default_str();
    sc_flick->add_option("--window", flick.window, "evaluation window, s (default: 10 min input)");
    sc_flick->add_flag("--pinst-csv", flick.pinst_csv, "also write the P_inst series");
    sc_flick->add_option("--out", flick.out, "output directory")->required();

    EvalArgs eval;
    auto* sc_eval = app.add_subcommand("eval", "Run the recreation-fidelity evaluation");
    sc_eval->add_option("--dataset", eval.dataset, "directory of waveform files")->required();
    sc_eval->add_option("--tw", eval.tw, "discrimination periods, s")->capture_default_str();
    sc_eval->add_option("--methods", eval.methods, "methods to evaluate")->capture_default_str();
    sc_eval->add_option("--seed", eval.seed, "master seed")->capture_default_str();
    sc_eval->add_option("--threads", eval.threads, "worker threads (default $VFLUX_THREADS or 1)");
    sc_eval->add_option("--format", eval.format, "auto|csv|raw")->capture_default_str();
    sc_eval->add_option("--out", eval.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParameter;
    }

    try {
        if (sc_synth->parsed()) return cmd_synth(synth);
        if (sc_vfi->parsed()) return cmd_vfi(vfi);
        if (sc_rec->parsed()) return cmd_recreate(rec);
        if (sc_flick->parsed()) return cmd_flicker(flick);
        if (sc_eval->parsed()) return cmd_eval(eval);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParameter;
    }
    return kExitParameter;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("vflux");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace vflux::cli
