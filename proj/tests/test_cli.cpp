#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "vflux/cli.hpp"
#include "vflux/vfi.hpp"
#include "vflux/waveform.hpp"

using namespace vflux;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "vflux_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("synth then vfi produces one csv per discrimination period") {
    const fs::path dir = fresh_dir("synth_vfi");
    CHECK(cli::run({"synth", "--kind", "rect", "--amp", "0.02", "--rate-cpm", "30", "--dur",
                    "20", "--rate", "4000", "--name", "sig", "--out", dir.string()}) == 0);
    const fs::path sig = dir / "sig.csv";
    CHECK(fs::exists(sig));
    CHECK(fs::exists(dir / "manifest.json"));

    const fs::path out = fresh_dir("synth_vfi_out");
    CHECK(cli::run({"vfi", "--in", sig.string(), "--tw", "1,10", "--out", out.string()}) == 0);
    CHECK(fs::exists(out / "sig_tw1.csv"));
    CHECK(fs::exists(out / "sig_tw10.csv"));
    const auto records = read_vfi_csv(out / "sig_tw10.csv");
    REQUIRE(records.size() == 2);
    CHECK(records[0].total_count() > 0);

    const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(manifest["command"] == "vfi");
    CHECK(manifest["config"]["sr_threshold_rel"] == 0.01);
    CHECK(manifest["outputs"].size() == 2);
}

TEST_CASE("vfi on a missing file exits 2 and names the path") {
    const fs::path out = fresh_dir("vfi_missing");
    CHECK(cli::run({"vfi", "--in", "no_such_file.csv", "--tw", "1", "--out", out.string()}) == 2);
}

TEST_CASE("vfi rejects a zero discrimination period") {
    const fs::path dir = fresh_dir("vfi_tw0");
    REQUIRE(cli::run({"synth", "--kind", "none", "--dur", "5", "--rate", "2000", "--name", "s",
                      "--out", dir.string()}) == 0);
    CHECK(cli::run({"vfi", "--in", (dir / "s.csv").string(), "--tw", "0", "--out",
                    dir.string()}) == 2);
}

TEST_CASE("recreate rejects an unknown method") {
    const fs::path dir = fresh_dir("rec_m4");
    REQUIRE(cli::run({"synth", "--kind", "none", "--dur", "5", "--rate", "2000", "--name", "s",
                      "--out", dir.string()}) == 0);
    CHECK(cli::run({"recreate", "--in", (dir / "s.csv").string(), "--method", "M4", "--tw", "1",
                    "--out", dir.string()}) == 2);
}

TEST_CASE("recreate flags an infeasible record with exit 3") {
    const fs::path dir = fresh_dir("rec_infeasible");
    const fs::path vfi_csv = dir / "bad.csv";
    {
        std::ofstream out(vfi_csv);
        out << "window_index,t_w,u_min,u_max,u_avg,delta_u,"
            << "f10_09,f09_08,f08_07,f07_05,f05_03,f03_01,f01_00\n";
        out << "0,10,229,230,229.5,2,1,0,0,0,0,0,0\n"; // delta_u > u_max - u_min
    }
    CHECK(cli::run({"recreate", "--in", vfi_csv.string(), "--method", "M1", "--seed", "1",
                    "--out", dir.string()}) == 3);
}

TEST_CASE("recreate from a waveform is deterministic and round-trips through vfi") {
    const fs::path dir = fresh_dir("rec_determinism");
    REQUIRE(cli::run({"synth", "--kind", "rect", "--amp", "0.03", "--rate-cpm", "24", "--dur",
                      "10", "--rate", "4000", "--name", "sig", "--out", dir.string()}) == 0);
    const std::string sig = (dir / "sig.csv").string();

    const fs::path out1 = fresh_dir("rec_out1");
    const fs::path out2 = fresh_dir("rec_out2");
    for (const auto& out : {out1, out2}) {
        CHECK(cli::run({"recreate", "--in", sig, "--method", "M3", "--seed", "42", "--tw", "10",
                        "--emit-waveform", "csv", "--out", out.string()}) == 0);
    }
    CHECK(slurp(out1 / "sig_M3_trajectory.csv") == slurp(out2 / "sig_M3_trajectory.csv"));
    CHECK(slurp(out1 / "sig_M3_recreated.csv") == slurp(out2 / "sig_M3_recreated.csv"));
    CHECK(fs::exists(out1 / "sig_M3_warnings.csv"));

    const SampledWaveform rec = load_waveform(out1 / "sig_M3_recreated.csv", WaveFormat::csv);
    CHECK(rec.duration_s() == doctest::Approx(10.0));
}

TEST_CASE("flicker requires ten minutes unless a window is given") {
    const fs::path dir = fresh_dir("flicker_short");
    REQUIRE(cli::run({"synth", "--kind", "sine", "--amp", "0.0025", "--freq", "8.8", "--dur",
                      "90", "--rate", "4000", "--name", "cal", "--out", dir.string()}) == 0);
    const std::string sig = (dir / "cal.csv").string();
    CHECK(cli::run({"flicker", "--in", sig, "--out", dir.string()}) == 2);

    const fs::path out = fresh_dir("flicker_ok");
    CHECK(cli::run({"flicker", "--in", sig, "--window", "60", "--pinst-csv", "--out",
                    out.string()}) == 0);
    const auto doc = nlohmann::json::parse(slurp(out / "flicker.json"));
    CHECK(doc["p_st"].get<double>() > 0.1);
    CHECK(doc["percentiles"].size() == 15);
    CHECK(doc["p_inst_max"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
    CHECK(fs::exists(out / "pinst.csv"));
}

TEST_CASE("flicker on a severity-one compliance signal reports p_st near one") {
    const fs::path dir = fresh_dir("flicker_compliance");
    const SampledWaveform w = synthesize_am(
        230.0, 50.0, 2000.0, {ModulationKind::rectangular, 0.00402, 1620.0, 620.0});
    save_waveform(w, dir / "cal.raw", WaveFormat::raw_f64);
    const fs::path out = fresh_dir("flicker_compliance_out");
    CHECK(cli::run({"flicker", "--in", (dir / "cal.raw").string(), "--window", "600", "--out",
                    out.string()}) == 0);
    const auto doc = nlohmann::json::parse(slurp(out / "flicker.json"));
    CHECK(doc["p_st"].get<double>() == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("flicker exits 2 on a five second input even with a window") {
    const fs::path dir = fresh_dir("flicker_5s");
    REQUIRE(cli::run({"synth", "--kind", "none", "--dur", "5", "--rate", "4000", "--name", "s",
                      "--out", dir.string()}) == 0);
    CHECK(cli::run({"flicker", "--in", (dir / "s.csv").string(), "--out", dir.string()}) == 2);
}

TEST_CASE("eval runs a small raw dataset and reruns byte-identically") {
    const fs::path data = fresh_dir("eval_data");
    int idx = 0;
    for (auto [amp, cpm] : {std::pair{0.02, 39.0}, {0.035, 110.0}}) {
        const SampledWaveform w = synthesize_am(
            230.0, 50.0, 2000.0, {ModulationKind::rectangular, amp, cpm, 620.0});
        save_waveform(w, data / ("sig" + std::to_string(idx++) + ".raw"), WaveFormat::raw_f64);
    }

    auto run_into = [&](const fs::path& out, const char* threads) {
        return cli::run({"eval", "--dataset", data.string(), "--tw", "600", "--methods",
                         "M1,M2", "--seed", "7", "--threads", threads, "--out", out.string()});
    };
    const fs::path out1 = fresh_dir("eval_out1");
    CHECK(run_into(out1, "1") == 0);
    for (const char* f : {"pairs.csv", "coeff_all.csv", "coeff_pst_lt2.csv", "coeff_pst_ge2.csv",
                          "scatter_tw600_M1.svg", "scatter_tw600_M2.svg", "manifest.json"}) {
        CHECK(fs::exists(out1 / f));
    }

    const fs::path out2 = fresh_dir("eval_out2");
    CHECK(run_into(out2, "2") == 0);
    for (const char* f : {"pairs.csv", "coeff_all.csv", "coeff_pst_lt2.csv", "coeff_pst_ge2.csv",
                          "scatter_tw600_M1.svg", "scatter_tw600_M2.svg"}) {
        CHECK(slurp(out1 / f) == slurp(out2 / f));
    }
}

TEST_CASE("eval rejects discrimination periods outside the supported set") {
    const fs::path data = fresh_dir("eval_badtw");
    const fs::path out = fresh_dir("eval_badtw_out");
    std::ofstream(data / "dummy.csv") << "# rate=2000 u_nominal=230 carrier=50\n0\n";
    CHECK(cli::run({"eval", "--dataset", data.string(), "--tw", "45", "--out",
                    out.string()}) == 2);
}
