#include "polymer/runner.hpp"
#include "polymer/table.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <string>

using namespace polymer;
using nlohmann::json;

namespace {

int shell(const std::string& cmd) {
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

RunConfig config_for(const std::string& sub, const std::filesystem::path& out, json extra = json::object()) {
    json j = {{"subcommand", sub}, {"out", out.string()}, {"seed", 11}};
    j.update(extra);
    return RunConfig::from_json(j);
}

}  // namespace

TEST_CASE("CSV rendering follows RFC 4180") {
    Table t{"x", {"a", "b"}, {}};
    t.add({json("plain"), json(1.5)});
    t.add({json("with,comma"), json("say \"hi\"")});
    t.add({json(3), json(true)});
    const std::string csv = render_csv(t);
    CHECK(csv == "a,b\r\nplain,1.5\r\n\"with,comma\",\"say \"\"hi\"\"\"\r\n3,true\r\n");
    const auto back = parse_csv(csv);
    REQUIRE(back.size() == 4);
    CHECK(back[2][0] == "with,comma");
    CHECK(back[2][1] == "say \"hi\"");
    CHECK_THROWS(t.add({json(1)}));
}

TEST_CASE("doubles round-trip through CSV") {
    Table t{"x", {"v"}, {}};
    const double v = 0.1 + 0.2;
    t.add({json(v)});
    const auto back = parse_csv(render_csv(t));
    CHECK(std::stod(back[1][0]) == v);
}

TEST_CASE("JSON lines keep column order and types") {
    Table t{"x", {"z", "a"}, {}};
    t.add({json(2), json("s")});
    CHECK(render_json_lines(t) == "{\"z\":2,\"a\":\"s\"}\n");
}

TEST_CASE("append requires a matching digest") {
    const auto dir = testing::scratch_dir("append");
    Table t{"x", {"digest", "seed", "v"}, {}};
    t.add({json("aaaa"), json(1), json(0.5)});
    for (Format f : {Format::csv, Format::json}) {
        const auto path = dir / ("out." + format_extension(f));
        write_table(t, path, f, "aaaa", false);
        write_table(t, path, f, "aaaa", true);
        const std::string text = testing::slurp(path);
        if (f == Format::csv) CHECK(parse_csv(text).size() == 3);
        else CHECK(std::count(text.begin(), text.end(), '\n') == 2);

        Table other = t;
        other.rows[0][0] = "bbbb";
        CHECK_THROWS_AS(write_table(other, path, f, "bbbb", true), DigestMismatch);
        CHECK(testing::slurp(path) == text);
        CHECK_FALSE(std::filesystem::exists(path.string() + ".partial"));
    }
}

TEST_CASE("empty tables produce a header-only file") {
    const auto dir = testing::scratch_dir("empty");
    Table t{"x", {"digest", "seed", "t"}, {}};
    emit_plot_data(t, dir / "e.csv", Format::csv, "d");
    CHECK(testing::slurp(dir / "e.csv") == "digest,seed,t\r\n");
    emit_plot_data(t, dir / "e.jsonl", Format::json, "d");
    CHECK(testing::slurp(dir / "e.jsonl").empty());
    CHECK(sibling_path(dir / "run.csv", "fit", Format::csv) == dir / "run.fit.csv");
    CHECK(sibling_path(dir / "run.jsonl", "fit", Format::json) == dir / "run.fit.jsonl");
}

TEST_CASE("config parsing and digests") {
    CHECK_THROWS_AS(RunConfig::from_json({{"subcommand", "lyapunov"}, {"bogus", 1}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"hurst", "high"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"format", "xml"}}), std::invalid_argument);

    auto a = RunConfig::from_json({{"subcommand", "lyapunov"}, {"seed", 1}, {"workers", 1}, {"out", "a.csv"}});
    auto b = RunConfig::from_json({{"subcommand", "lyapunov"}, {"seed", 2}, {"workers", 4}, {"out", "b.csv"}});
    CHECK(a.digest() == b.digest());
    b.hurst = 0.6;
    CHECK(a.digest() != b.digest());
    a.zero_field = true;
    CHECK(a.digest() != config_for("lyapunov", "a.csv").digest());

    CHECK_THROWS_AS(RunConfig::from_json({{"subcommand", "nope"}}).validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"subcommand", "lyapunov"}, {"kappa", 5.0}}).validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"subcommand", "circle"}, {"hurst", 0.4}}).validate(), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"subcommand", "estimate-U"}, {"t", 2.05}}).validate(), ConfigError);
    CHECK_NOTHROW(RunConfig::from_json({{"subcommand", "estimate-U"}, {"t", 2.5}}).validate());
}

TEST_CASE("partition subcommand cross-checks DP and enumeration") {
    auto c = config_for("partition", "p.csv", {{"cells", 6}, {"env_replicas", 30}});
    const auto res = execute(c);
    CHECK(res.violations.empty());
    const auto& summary = res.tables.at(1);
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.rows[0][5].get<double>() <= 1e-12);
    for (const auto& row : res.tables.front().rows) {
        CHECK(row[0] == c.digest());
        CHECK(row[1] == 11);
    }
}

TEST_CASE("lyapunov with the zero field reports slope zero") {
    const auto res = execute(config_for("lyapunov", "l.csv", {{"zero_field", true}, {"env_replicas", 3}}));
    const auto& trace = res.tables.at(0);
    CHECK(trace.columns == std::vector<std::string>{"digest", "seed", "t", "U_hat", "U_hat_se", "U_hat_over_t", "se"});
    const auto& fit = res.tables.at(1);
    CHECK(std::abs(fit.rows.at(0)[2].get<double>()) <= 1e-14);
}

TEST_CASE("bounds scan columns") {
    const auto res = execute(config_for("bounds", "b.csv", {{"samples", 200}, {"env_replicas", 4}}));
    CHECK(res.tables.at(0).columns ==
          std::vector<std::string>{"digest", "seed", "name", "params", "bound", "empirical", "margin", "satisfied"});
    CHECK(res.violations.empty());
}

TEST_CASE("reruns are byte-identical at any worker count") {
    const auto dir = testing::scratch_dir("determinism");
    for (const std::string sub : {"estimate-U", "superadd", "lower-bound"}) {
        std::string first;
        for (int workers : {1, 2, 3}) {
            const auto out = dir / (sub + std::to_string(workers) + ".csv");
            auto c = config_for(sub, out, {{"env_replicas", 8}, {"workers", workers}, {"n_max", 3},
                                           {"m_values", {1, 2}}});
            run(c);
            const auto text = testing::slurp(out);
            if (workers == 1) first = text;
            else CHECK(text == first);
        }
    }
}

TEST_CASE("pam binary: exit codes, seed precedence and outputs") {
    const auto dir = testing::scratch_dir("binary");
    const std::string pam = PAM_EXECUTABLE;
    const auto out = (dir / "u.csv").string();
    CHECK(shell(pam + " estimate-U --t 1 --replicas 5 --seed 3 --out " + out) == 0);
    auto rows = parse_csv(testing::slurp(out));
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "3");

    const auto cfg = dir / "c.json";
    std::ofstream(cfg) << R"({"subcommand": "estimate-U", "t": 1, "env_replicas": 5, "seed": 4})";
    CHECK(shell(pam + " --config " + cfg.string() + " --out " + out) == 0);
    CHECK(parse_csv(testing::slurp(out))[1][1] == "4");
    CHECK(shell("PAM_SEED=8 " + pam + " --config " + cfg.string() + " --out " + out) == 0);
    CHECK(parse_csv(testing::slurp(out))[1][1] == "8");
    CHECK(shell("PAM_SEED=8 " + pam + " --config " + cfg.string() + " --seed 9 --out " + out) == 0);
    CHECK(parse_csv(testing::slurp(out))[1][1] == "9");

    CHECK(shell(pam + " estimate-U --t 1 --replicas 5 --out " + out + " --format json") == 0);
    CHECK(json::parse(testing::slurp(out)).contains("digest"));

    CHECK(shell(pam + " estimate-U --kappa 9 --out " + out) == 2);
    CHECK(shell(pam + " nonsense --out " + out) == 2);
    CHECK(shell(pam + " estimate-U --no-such-flag") == 2);
    CHECK(shell(pam + " estimate-U") == 2);
    CHECK(shell("PAM_SEED=abc " + pam + " estimate-U --out " + out) == 2);

    // Appending under a different configuration is refused.
    const auto app = (dir / "a.csv").string();
    CHECK(shell(pam + " estimate-U --t 1 --replicas 5 --out " + app) == 0);
    CHECK(shell(pam + " estimate-U --t 1 --replicas 5 --seed 2 --append --out " + app) == 0);
    CHECK(parse_csv(testing::slurp(app)).size() == 3);
    CHECK(shell(pam + " estimate-U --t 2 --replicas 5 --append --out " + app) == 1);
    CHECK(parse_csv(testing::slurp(app)).size() == 3);
}
