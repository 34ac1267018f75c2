#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "adi/checkpoint.hpp"
#include "adi/config.hpp"
#include "adi/io.hpp"
#include "adi/report.hpp"

#include <filesystem>

using namespace adi;

namespace fs = std::filesystem;

TEST_CASE("config serializes and parses back to the same canonical form") {
    RunConfig cfg;
    cfg.master_seed = 42;
    cfg.mask.beta = 0.4;
    cfg.mask.strategy = MaskStrategy::Uniform;
    cfg.invert.tie_layers = true;
    cfg.sweep_betas = {0.1, 0.3};
    const std::string text = cfg.serialize();
    RunConfig back = RunConfig::parse(text);
    CHECK(back.serialize() == text);
    CHECK(back.hash() == cfg.hash());
    CHECK(back.master_seed == 42);
    CHECK(back.mask.beta == 0.4);
    CHECK(back.mask.strategy == MaskStrategy::Uniform);
    CHECK(back.invert.tie_layers);
    CHECK(back.sweep_betas == std::vector<double>{0.1, 0.3});
}

TEST_CASE("config hash is stable and sensitive") {
    RunConfig a, b;
    CHECK(a.hash() == b.hash());
    b.mask.beta = 0.61;
    CHECK(a.hash() != b.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("config parser rejects unknown keys and malformed lines") {
    CHECK_THROWS_WITH_AS(RunConfig::parse("bogus.key=1\n"), doctest::Contains("unknown key"),
                         std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse("no_equals_sign\n"), std::invalid_argument);
    CHECK_NOTHROW(RunConfig::parse("# comment\n\nmask.beta=0.5\n"));
}

TEST_CASE("seed derivation depends only on master_seed") {
    RunConfig a, b;
    a.master_seed = 5;
    b.master_seed = 5;
    a.derive_seeds();
    b.derive_seeds();
    CHECK(a.data.seed == b.data.seed);
    CHECK(a.invert.seed == b.invert.seed);
    b.master_seed = 6;
    b.derive_seeds();
    CHECK(a.data.seed != b.data.seed);
}

TEST_CASE("atomic_write leaves no temp file and round-trips bytes") {
    auto dir = fs::temp_directory_path() / "adi_io_test";
    fs::create_directories(dir);
    const std::string payload = "hello\0world", path = (dir / "x.bin").string();
    atomic_write(dir / "x.bin", payload);
    CHECK(read_file(dir / "x.bin") == payload);
    CHECK_FALSE(fs::exists(dir / "x.bin.tmp"));
    fs::remove_all(dir);
}

TEST_CASE("ppm preview carries the P6 header and full payload") {
    Array img({3, 32, 32});
    for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = (i % 7) / 7.0;
    auto dir = fs::temp_directory_path() / "adi_ppm_test";
    fs::create_directories(dir);
    write_ppm(dir / "img.ppm", img);
    std::string bytes = read_file(dir / "img.ppm");
    CHECK(bytes.rfind("P6\n32 32\n255\n", 0) == 0);
    CHECK(bytes.size() == std::string("P6\n32 32\n255\n").size() + 3 * 32 * 32);
    fs::remove_all(dir);
}

TEST_CASE("metrics CSV row parses back to the same values") {
    SweepRow row;
    row.config_hash = "00ff00ff00ff00ff";
    row.strategy = "adi";
    row.beta = 0.6;
    row.merge = "intersection";
    row.metrics.action_acc = 0.875;
    row.metrics.subject_acc = 0.75;
    row.metrics.total_acc = 0.625;
    row.metrics.context_leak = 0.125;
    row.metrics.overlap_rate = 0.21;
    row.metrics.ci_low = 0.4;
    row.metrics.ci_high = 0.8;
    const std::string text = metrics_csv_header() + "\n" + metrics_csv_row(row) + "\n";
    auto rows = parse_metrics_csv(text);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].strategy == "adi");
    CHECK(rows[0].beta == doctest::Approx(0.6));
    CHECK(rows[0].metrics.action_acc == doctest::Approx(0.875));
    CHECK(rows[0].metrics.ci_high == doctest::Approx(0.8));
}

TEST_CASE("report renders the three standard charts from a sweep CSV") {
    auto dir = fs::temp_directory_path() / "adi_report_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::string csv = metrics_csv_header() + "\n";
    auto mk = [&](const std::string& strat, double beta, const std::string& merge, double acc) {
        SweepRow r;
        r.config_hash = "deadbeefdeadbeef";
        r.strategy = strat;
        r.beta = beta;
        r.merge = merge;
        r.metrics.action_acc = acc;
        r.metrics.subject_acc = acc * 0.9;
        r.metrics.total_acc = acc * 0.8;
        csv += metrics_csv_row(r) + "\n";
    };
    mk("adi", 0.2, "intersection", 0.5);
    mk("adi", 0.6, "intersection", 0.9);
    mk("adi", 0.8, "intersection", 0.7);
    mk("none", 0.6, "intersection", 0.4);
    mk("uniform", 0.6, "intersection", 0.3);
    mk("adi", 0.6, "union", 0.6);
    atomic_write(dir / "sweep.csv", csv);
    auto written = render_report(dir / "sweep.csv", dir / "report");
    CHECK(written.size() == 3);
    for (const auto& p : written) {
        std::string svg = read_file(p);
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("identifiers persist under the adi.v.{layer} names") {
    ParamSet idents;
    Rng rng(3);
    for (int l = 0; l < 4; ++l) {
        Array v({8});
        for (double& x : v.data) x = rng.gauss();
        idents.add("adi.v." + std::to_string(l), std::move(v), true);
    }
    auto path = fs::temp_directory_path() / "adi_idents_test.ckpt";
    save_checkpoint(path, idents);
    ParamSet back = load_checkpoint(path);
    REQUIRE(back.size() == 4);
    for (int l = 0; l < 4; ++l) CHECK(back.has("adi.v." + std::to_string(l)));
    fs::remove(path);
}
