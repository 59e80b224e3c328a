#include "gwharm/config.hpp"
#include "gwharm/error.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gwharm;

namespace {

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

std::optional<RunConfig> parse(std::vector<const char*> args) {
    args.insert(args.begin(), "gwharm");
    std::ostringstream help;
    return parse_config(static_cast<int>(args.size()), args.data(), help);
}

std::string temp_file(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << content;
    return path.string();
}

} // namespace

TEST_CASE("sweep command line") {
    const auto cfg =
        parse({"sweep", "--offspring", "1:0.5,2:0.5", "--lambda-min", "0.05", "--lambda-max", "1.45", "--points", "50"});
    REQUIRE(cfg);
    CHECK(cfg->command == Command::Sweep);
    CHECK(*cfg->lambda_min == 0.05);
    CHECK(*cfg->lambda_max == 1.45);
    CHECK(cfg->points == 50);
    CHECK(cfg->seed == 0);
    CHECK(cfg->resolved.count("pool") == 0);
    CHECK(cfg->resolved.at("points") == "50");

    CHECK(code_of([] { parse({"sweep", "--lambda-min", "0.05", "--lambda-max", "1.45"}); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { parse({"sweep", "--offspring", "1:0.5,2:0.5", "--lambda-min", "0.05", "--lambda-max", "1.5"}); }) ==
          ErrorCode::NotTransient);
    CHECK(code_of([] { parse({"beta-density", "--offspring", "2:1", "--lambda", "1", "--step", "0.01"}); }) ==
          ErrorCode::StepTooCoarse);
    CHECK(code_of([] { parse({"sweep", "--bogus", "1"}); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse({}); }) == ErrorCode::ParseError);
}

TEST_CASE("help and version do not produce a config") {
    CHECK_FALSE(parse({"--help"}));
    CHECK_FALSE(parse({"--version"}));
}

TEST_CASE("config files") {
    const std::string good = temp_file("gwharm_cfg_good.conf",
                                       "# comment\n"
                                       "offspring = {1:1/3, 2:1/3, 3:1/3}\n"
                                       "lambda = 0.7   # trailing comment\n"
                                       "iters = 50\n");
    auto cfg = parse({"beta-density", "--config", good.c_str()});
    REQUIRE(cfg);
    CHECK(*cfg->lambda == 0.7);
    CHECK(cfg->iters == 50);
    cfg = parse({"beta-density", "--config", good.c_str(), "--lambda", "1.2"});
    REQUIRE(cfg);
    CHECK(*cfg->lambda == 1.2);

    const std::string bad = temp_file("gwharm_cfg_bad.conf", "offspring = 2:1\n\nlambada = 1\n");
    try {
        read_config_file(bad);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    const std::string malformed = temp_file("gwharm_cfg_malformed.conf", "offspring 2:1\n");
    CHECK(code_of([&] { read_config_file(malformed); }) == ErrorCode::ParseError);
    CHECK(code_of([] { read_config_file("/nonexistent/gwharm.conf"); }) == ErrorCode::IoError);
}

TEST_CASE("offspring grammar") {
    const OffspringLaw a = parse_offspring("1:0.5,2:0.5");
    CHECK(a.mean() == doctest::Approx(1.5));
    const OffspringLaw b = parse_offspring(" { 1:1/3, 2:1/3 , 3:1/3 } ");
    CHECK(b.mean() == doctest::Approx(2.0));
    const OffspringLaw c = parse_offspring("lin(alpha=1.5)");
    CHECK(c.mean() > 1.0);
    CHECK(code_of([] { parse_offspring("lin(alpha=2.5)"); }) == ErrorCode::AlphaOutOfRange);
    CHECK(code_of([] { parse_offspring("0:0.5,2:0.5"); }) == ErrorCode::ZeroOffspringMass);
    CHECK(code_of([] { parse_offspring("1:1"); }) == ErrorCode::DegenerateAtOne);
    CHECK(code_of([] { parse_offspring("1:0.5,1:0.5"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_offspring("x:1"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_offspring("{2:1"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_offspring("geo(p=0.5)"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_offspring(""); }) == ErrorCode::ParseError);
}

TEST_CASE("mark grammar") {
    CHECK(parse_mark("inverse_uniform").kind() == MarkLaw::Kind::InverseUniform);
    const MarkLaw p = parse_mark("point_mass(2)");
    CHECK(p.kind() == MarkLaw::Kind::PointMass);
    CHECK(p.point_value() == 2.0);
    CHECK(parse_mark("point_mass(g=3)").point_value() == 3.0);
    CHECK(parse_mark("pareto_tail(a=1.5, C=1)").kind() == MarkLaw::Kind::ParetoTail);
    const std::string samples = temp_file("gwharm_marks.txt", "1.5 2.5\n3\n");
    CHECK(parse_mark("empirical(" + samples + ")").kind() == MarkLaw::Kind::Empirical);
    CHECK(code_of([] { parse_mark("uniform"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse_mark("empirical(/nonexistent/marks)"); }) == ErrorCode::IoError);
}

TEST_CASE("number formatting round-trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5}) {
        CHECK(std::stod(format_double(x)) == x);
    }
    CHECK(format_double(NAN) == "nan");
    CHECK(format_double(INFINITY) == "inf");
}

TEST_CASE("csv output") {
    CsvTable t;
    t.meta = {{"command", "sweep"}};
    t.columns = {"lambda", "dim", "speed"};
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str() == "# command=sweep\nlambda,dim,speed\n");
    t.rows.push_back({"1", "2", "3"});
    std::ostringstream os2;
    write_csv(os2, t);
    CHECK(os2.str() == "# command=sweep\nlambda,dim,speed\n1,2,3\n");
    CHECK(code_of([&] { write_csv(std::string("/nonexistent/dir/out.csv"), t); }) == ErrorCode::IoError);
}

TEST_CASE("run metadata") {
    const auto cfg = parse({"kernel-test", "--seed", "42", "--samples", "1e3"});
    REQUIRE(cfg);
    CHECK(cfg->samples == 1000);
    const auto meta = run_metadata(*cfg);
    CHECK(meta.front().first == "command");
    CHECK(meta.front().second == "kernel-test");
    bool seen = false;
    for (const auto& [k, v] : meta) {
        seen |= k == "seed" && v == "42";
    }
    CHECK(seen);
}
