#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "nlsid/cli.hpp"
#include "nlsid/io.hpp"

using namespace nlsid;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out, err;
};

Run nlsid_run(std::vector<std::string> args) {
    args.insert(args.begin(), "nlsid");
    std::ostringstream out, err;
    Run r;
    r.code = cli::run(args, out, err);
    r.out  = out.str();
    r.err  = err.str();
    return r;
}

/// Fresh output root for one test case; relative --out paths resolve under it.
struct OutputRoot {
    fs::path path;
    OutputRoot() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("nlsid_cli_" + std::to_string(rd()));
        fs::create_directories(path);
        setenv(cli::kOutputRootEnv, path.c_str(), 1);
    }
    ~OutputRoot() {
        unsetenv(cli::kOutputRootEnv);
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& p) const { return path / p; }
};

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

double number_after(const std::string& text, const std::string& label) {
    const auto pos = text.find(label);
    REQUIRE(pos != std::string::npos);
    return std::stod(text.substr(pos + label.size()));
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

}  // namespace

TEST_CASE("cli design: default grid, printed resolution and manifest") {
    OutputRoot root;
    const Run r = nlsid_run({"design", "-o", "d"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "frequency resolution: 0.01 Hz"));
    CHECK(contains(r.out, "excited lines: 150"));
    for (const char* f : {"grid.json", "signal_r0.csv", "signal_r1.csv", "manifest.json"}) CHECK(fs::exists(root / "d" / f));

    const io::json m = io::read_json(root / "d/manifest.json");
    CHECK(m.at("command") == "design");
    CHECK(m.at("status") == "ok");
    CHECK(m.at("config_hash").get<std::string>().size() == 16);
    CHECK(m.at("outputs").at("grid.json") == io::file_digest(root / "d/grid.json"));
    CHECK(m.at("versions").contains("eigen"));
}

TEST_CASE("cli design: explicit band and rms") {
    OutputRoot root;
    const Run r = nlsid_run({"design", "--band", "1", "5", "--rms", "20", "-o", "d"});
    REQUIRE(r.code == 0);
    CHECK(number_after(r.out, "rms[0]: ") == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(number_after(r.out, "rms[1]: ") == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("cli: configuration errors exit with 2 and name the field") {
    OutputRoot root;
    Run r = nlsid_run({"design", "--band", "5", "1", "-o", "d"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "f_lo"));
    r = nlsid_run({"design", "--band", "1", "30", "-o", "d"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "f_hi"));
    r = nlsid_run({"analyze", "--set", "bogus.key=1"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "bogus.key"));
    r = nlsid_run({"design", "--no-such-flag"});
    CHECK(r.code == 2);
    r = nlsid_run({});
    CHECK(r.code == 2);
    r = nlsid_run({"analyze", "-i", (root / "missing.csv").string(), "-o", "a"});
    CHECK(r.code == 2);
    r = nlsid_run({"simulate", "--cell", "soc50", "-o", "s"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "soc50"));
}

TEST_CASE("cli: the installed binary reports exit codes to the shell") {
    OutputRoot root;
    const std::string tool = NLSID_TOOL_PATH;
    int status = std::system((tool + " design --band 5 1 -o d > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 2);
    status = std::system((tool + " design --N 1000 -o d > /dev/null 2>&1").c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(root / "d/grid.json"));
}

TEST_CASE("cli: config file, --set and flags apply in that order") {
    OutputRoot root;
    const fs::path cfg = root / "run.toml";
    io::write_text(cfg, "[signal]\nN = 1000\nf_hi = 4  # Hz\nseed = 3\n");
    Run r = nlsid_run({"design", "-c", cfg.string(), "-o", "a"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "frequency resolution: 0.05 Hz"));
    CHECK(contains(r.out, "band: 1 - 4 Hz"));
    r = nlsid_run({"design", "-c", cfg.string(), "--set", "signal.N=2000", "-o", "b"});
    CHECK(contains(r.out, "frequency resolution: 0.025 Hz"));
    r = nlsid_run({"design", "-c", cfg.string(), "--set", "signal.N=2000", "--N", "500", "-o", "c"});
    CHECK(contains(r.out, "frequency resolution: 0.1 Hz"));
    const io::json m = io::read_json(root / "a/manifest.json");
    CHECK(m.at("config").at("signal.seed") == "3");
    CHECK(m.at("inputs").contains(cfg.string()));
}

TEST_CASE("cli analyze: soc90 is linear, soc10 is even dominant") {
    OutputRoot root;
    Run r = nlsid_run({"analyze", "--cell", "soc90", "-o", "a90"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "verdict: linear\n"));
    r = nlsid_run({"analyze", "--cell", "soc10", "-o", "a10"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "verdict: even+odd, even dominant\n"));
    CHECK(fs::exists(root / "a10/report.csv"));
    const io::json rep = io::read_json(root / "a10/report.json");
    CHECK(rep.at("verdict") == "even+odd, even dominant");
}

TEST_CASE("cli: simulate, ingest and analyze a record on disk") {
    OutputRoot root;
    Run r = nlsid_run({"simulate", "--cell", "soc10", "--N", "1000", "--periods", "4", "-o", "s"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "record: 2 realization(s) x 4 period(s) x 1000 samples"));
    const fs::path csv = root / "s/record.csv";

    r = nlsid_run({"analyze", "-i", csv.string(), "--grid", (root / "s/grid.json").string(), "-o", "a"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "verdict: even+odd, even dominant"));
    const io::json m = io::read_json(root / "a/manifest.json");
    CHECK(m.at("inputs").at(csv.string()) == io::file_digest(csv));

    r = nlsid_run({"analyze", "-i", csv.string(), "-o", "b"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--grid"));

    // Ragged copy without a sidecar: the layout comes from the flags.
    std::ifstream in(csv);
    std::ofstream ragged(root / "ragged.csv");
    std::string line;
    for (int i = 0; i < 1 + 7000 + 5 && std::getline(in, line); ++i) ragged << line << '\n';
    ragged.close();
    r = nlsid_run({"ingest", "-i", (root / "ragged.csv").string(), "--N", "1000", "--realizations", "1", "-o", "g"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.err, "dropped 5 trailing sample(s) of 7005"));
    CHECK(contains(r.out, "record: 1 realization(s) x 7 period(s) x 1000 samples"));
}

TEST_CASE("cli identify: soc10 end to end, deterministic, PNLSS error at most a fifth of the linear one") {
    OutputRoot root;
    const Run a = nlsid_run({"identify", "--cell", "soc10", "-o", "i1"});
    REQUIRE(a.code == 0);
    const double ratio = number_after(a.out, "rmse ratio (pnlss/linear): ");
    MESSAGE("soc10 rmse ratio " << ratio);
    CHECK(ratio <= 0.2);
    CHECK(contains(a.out, "PNLSS model improves on the linear model"));
    for (const char* f : {"linear_model.json", "pnlss_model.json", "fit_log.csv", "error_spectrum.csv", "bla.csv", "mdl.json",
                          "summary.json", "manifest.json", "trend_r0.csv"})
        CHECK_MESSAGE(fs::exists(root / "i1" / f), f);

    const io::json model = io::read_json(root / "i1/pnlss_model.json");
    const io::json man   = io::read_json(root / "i1/manifest.json");
    CHECK(model.at("provenance").at("config_hash") == man.at("config_hash"));
    CHECK(slurp(root / "i1/fit_log.csv").rfind("iter,lambda,est_cost,val_cost", 0) == 0);

    const Run b = nlsid_run({"identify", "--cell", "soc10", "-o", "i2"});
    REQUIRE(b.code == 0);
    for (const char* f : {"linear_model.json", "pnlss_model.json", "fit_log.csv", "error_spectrum.csv", "summary.json"})
        CHECK_MESSAGE(slurp(root / "i1" / f) == slurp(root / "i2" / f), f);

    const Run v = nlsid_run({"validate", "-m", (root / "i1/pnlss_model.json").string(), "--cell", "soc10", "-o", "v"});
    REQUIRE(v.code == 0);
    CHECK(number_after(v.out, "rmse[1]: ") == doctest::Approx(number_after(a.out, "rmse pnlss: ")).epsilon(1e-9));
}

TEST_CASE("cli identify: soc90 reports the linear model as adequate") {
    OutputRoot root;
    const Run r = nlsid_run({"identify", "--cell", "soc90", "-o", "i"});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "linear model adequate (PNLSS improvement < 3 dB)"));
    const io::json s = io::read_json(root / "i/summary.json");
    CHECK(s.at("improvement_db").get<double>() < 3.0);
    CHECK(s.at("linear_model_adequate") == true);
}

TEST_CASE("cli validate: a diverging model is a numerical failure (exit 3)") {
    OutputRoot root;
    StateSpaceModel ss;
    ss.A = Mat::Constant(1, 1, 0.5);
    ss.B = ss.C = Mat::Ones(1, 1);
    ss.D        = Mat::Zero(1, 1);
    PnlssStructure st;
    st.state_degrees  = {2};
    st.output_degrees = {};
    PnlssModel m      = init_from_linear(ss, st);
    m.E(0, 0)         = 10.0;
    io::write_json(root / "bad.json", io::pnlss_to_json(m));
    const Run r = nlsid_run({"validate", "-m", (root / "bad.json").string(), "--cell", "soc10", "--N", "500", "--periods", "3",
                             "-o", "v"});
    CHECK(r.code == 3);
    CHECK(contains(r.err, "state norm"));
    const io::json man = io::read_json(root / "v/manifest.json");
    CHECK(man.at("status") == "failed");
}
