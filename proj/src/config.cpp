#include "gwharm/config.hpp"

#include "gwharm/error.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace gwharm {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) {
        ++a;
    }
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) {
        --b;
    }
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return parts;
}

[[noreturn]] void parse_fail(const std::string& what) { fail(ErrorCode::ParseError, what); }

double parse_number(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        parse_fail(where + ": expected a number, got '" + text + "'");
    }
    return v;
}

// Accepts "0.5" and "1/3".
double parse_probability(const std::string& text, const std::string& where) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) {
        return parse_number(text, where);
    }
    const double num = parse_number(text.substr(0, slash), where);
    const double den = parse_number(text.substr(slash + 1), where);
    if (den == 0.0) {
        parse_fail(where + ": zero denominator");
    }
    return num / den;
}

std::size_t parse_count(const std::string& text, const std::string& where) {
    const double v = parse_number(text, where);
    if (!(v >= 0.0) || v > 9.0e15 || std::floor(v) != v) {
        parse_fail(where + ": expected a non-negative integer, got '" + text + "'");
    }
    return static_cast<std::size_t>(v);
}

int parse_int(const std::string& text, const std::string& where) {
    const double v = parse_number(text, where);
    if (std::floor(v) != v || std::abs(v) > 2.0e9) {
        parse_fail(where + ": expected an integer, got '" + text + "'");
    }
    return static_cast<int>(v);
}

std::uint64_t parse_seed(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        parse_fail(where + ": seed must be a 64-bit unsigned integer, got '" + text + "'");
    }
    return v;
}

// Splits "name(args)" into name and the argument text.
bool call_form(const std::string& spec, std::string& name, std::string& args) {
    const auto open = spec.find('(');
    if (open == std::string::npos) {
        return false;
    }
    if (spec.back() != ')') {
        parse_fail("unbalanced parentheses in '" + spec + "'");
    }
    name = trim(spec.substr(0, open));
    args = spec.substr(open + 1, spec.size() - open - 2);
    return true;
}

// "a=1.5, C=1" or positional "1.5, 1" against the given parameter names.
std::map<std::string, double> named_args(const std::string& args, const std::vector<std::string>& names,
                                         const std::string& spec) {
    std::map<std::string, double> out;
    if (trim(args).empty()) {
        return out;
    }
    const auto parts = split(args, ',');
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        std::string key;
        std::string value;
        if (eq == std::string::npos) {
            if (i >= names.size()) {
                parse_fail("too many arguments in '" + spec + "'");
            }
            key = names[i];
            value = parts[i];
        } else {
            key = trim(parts[i].substr(0, eq));
            value = parts[i].substr(eq + 1);
        }
        if (std::find(names.begin(), names.end(), key) == names.end()) {
            parse_fail("unknown argument '" + key + "' in '" + spec + "'");
        }
        if (out.count(key) != 0) {
            parse_fail("argument '" + key + "' given twice in '" + spec + "'");
        }
        out[key] = parse_number(value, spec);
    }
    return out;
}

const std::map<std::string, Command>& command_names() {
    static const std::map<std::string, Command> names{
        {"beta-density", Command::BetaDensity},   {"sweep", Command::Sweep},
        {"recursive-lengths", Command::RecursiveLengths}, {"mc-verify", Command::McVerify},
        {"kernel-test", Command::KernelTest},     {"reproduce-figures", Command::ReproduceFigures},
    };
    return names;
}

const std::vector<std::string>& command_keys(Command c) {
    static const std::map<Command, std::vector<std::string>> keys{
        {Command::BetaDensity, {"offspring", "lambda", "step", "iters"}},
        {Command::Sweep, {"offspring", "lambda-min", "lambda-max", "points", "step", "iters"}},
        {Command::RecursiveLengths, {"offspring", "mark", "pool", "gens"}},
        {Command::McVerify,
         {"offspring", "lambda", "step", "iters", "depth", "horizon", "window", "trees", "steps", "walks",
          "stat-trees", "stat-depth"}},
        {Command::KernelTest, {"samples"}},
        {Command::ReproduceFigures, {"points", "step", "iters"}},
    };
    return keys.at(c);
}

// Output locations are not part of the recorded configuration.
bool is_path_key(const std::string& key) {
    return key == "out" || key == "out-dir" || key == "ecdf-out";
}

} // namespace

const char* to_string(Command c) {
    for (const auto& [name, cmd] : command_names()) {
        if (cmd == c) {
            return name.c_str();
        }
    }
    return "?";
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "offspring", "mark",    "lambda",     "lambda-min", "lambda-max", "points", "step",
        "iters",     "pool",    "gens",       "depth",      "horizon",    "window", "trees",
        "steps",     "walks",   "stat-trees", "stat-depth", "samples",    "seed",   "workers",
        "out",       "out-dir", "ecdf-out",
    };
    return keys;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open config file '" + path + "'");
    }
    const auto& keys = config_keys();
    std::map<std::string, std::string> values;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path + ":" + std::to_string(lineno);
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) {
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            parse_fail(where + ": expected 'key = value'");
        }
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            parse_fail(where + ": unknown key '" + key + "'");
        }
        if (value.empty()) {
            parse_fail(where + ": empty value for '" + key + "'");
        }
        values[key] = value;
    }
    return values;
}

std::optional<RunConfig> parse_config(int argc, const char* const* argv, std::ostream& help_out) {
    CLI::App app{"Harmonic measure, speed and dimension of biased walks on Galton-Watson trees"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);
    std::map<std::string, std::string> flag_values;
    std::map<std::string, CLI::App*> subs;
    std::map<std::string, std::string> config_path;
    for (const auto& [name, cmd] : command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        subs[name] = sub;
        sub->add_option("--config", config_path[name], "key = value file; flags take precedence");
        for (const auto& key : config_keys()) {
            sub->add_option("--" + key, flag_values[name + "\n" + key]);
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        help_out << app.help();
        return std::nullopt;
    } catch (const CLI::CallForAllHelp&) {
        help_out << app.help("", CLI::AppFormatMode::All);
        return std::nullopt;
    } catch (const CLI::CallForVersion&) {
        help_out << kVersion << "\n";
        return std::nullopt;
    } catch (const CLI::ParseError& e) {
        parse_fail(e.what());
    }
    for (const auto& [name, sub] : subs) {
        if (!sub->parsed()) {
            continue;
        }
        if (sub->get_subcommands().size() > 0) {
            parse_fail("unexpected nested command");
        }
        std::map<std::string, std::string> values;
        if (!config_path[name].empty()) {
            values = read_config_file(config_path[name]);
        }
        for (const auto& key : config_keys()) {
            if (sub->count("--" + key) > 0) {
                values[key] = flag_values[name + "\n" + key];
            }
        }
        return build_config(command_names().at(name), values);
    }
    parse_fail("no command given");
}

RunConfig build_config(Command command, const std::map<std::string, std::string>& values) {
    RunConfig cfg;
    cfg.command = command;
    auto has = [&](const char* key) { return values.count(key) != 0; };
    auto where = [](const char* key) { return std::string("--") + key; };
    auto get = [&](const char* key) { return values.at(key); };

    if (has("offspring")) cfg.offspring = get("offspring");
    if (has("mark")) cfg.mark = get("mark");
    if (has("lambda")) cfg.lambda = parse_number(get("lambda"), where("lambda"));
    if (has("lambda-min")) cfg.lambda_min = parse_number(get("lambda-min"), where("lambda-min"));
    if (has("lambda-max")) cfg.lambda_max = parse_number(get("lambda-max"), where("lambda-max"));
    if (has("points")) cfg.points = parse_int(get("points"), where("points"));
    if (has("step")) cfg.step = parse_probability(get("step"), where("step"));
    if (has("iters")) cfg.iters = parse_int(get("iters"), where("iters"));
    if (has("pool")) cfg.pool = parse_count(get("pool"), where("pool"));
    if (has("gens")) cfg.gens = parse_int(get("gens"), where("gens"));
    if (has("depth")) cfg.depth = parse_int(get("depth"), where("depth"));
    if (has("horizon")) cfg.horizon = parse_int(get("horizon"), where("horizon"));
    if (has("window")) cfg.window = parse_int(get("window"), where("window"));
    if (has("trees")) cfg.trees = parse_count(get("trees"), where("trees"));
    if (has("steps")) cfg.steps = parse_count(get("steps"), where("steps"));
    if (has("walks")) cfg.walks = parse_count(get("walks"), where("walks"));
    if (has("stat-trees")) cfg.stat_trees = parse_count(get("stat-trees"), where("stat-trees"));
    if (has("stat-depth")) cfg.stat_depth = parse_int(get("stat-depth"), where("stat-depth"));
    if (has("samples")) cfg.samples = parse_count(get("samples"), where("samples"));
    if (has("workers")) {
        const std::size_t w = parse_count(get("workers"), where("workers"));
        if (w > 4096) {
            parse_fail("--workers: at most 4096");
        }
        cfg.workers = static_cast<unsigned>(w);
    }
    if (has("out")) cfg.out = get("out");
    if (has("out-dir")) cfg.out_dir = get("out-dir");
    if (has("ecdf-out")) cfg.ecdf_out = get("ecdf-out");
    if (has("seed")) {
        cfg.seed = parse_seed(get("seed"), where("seed"));
        cfg.seed_given = true;
    } else if (command == Command::RecursiveLengths || command == Command::McVerify ||
               command == Command::KernelTest) {
        std::random_device rd;
        cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }

    auto require = [&](const char* key) {
        if (!has(key)) {
            parse_fail(std::string(to_string(command)) + " requires --" + key);
        }
    };
    // Law specs are parsed here so that syntax errors surface before any work.
    std::optional<OffspringLaw> law;
    switch (command) {
    case Command::BetaDensity:
    case Command::McVerify:
        require("offspring");
        require("lambda");
        break;
    case Command::Sweep:
        require("offspring");
        require("lambda-min");
        require("lambda-max");
        break;
    case Command::RecursiveLengths:
        require("offspring");
        require("mark");
        break;
    case Command::KernelTest:
    case Command::ReproduceFigures:
        break;
    }
    if (cfg.offspring) {
        law = parse_offspring(*cfg.offspring);
    }
    if (cfg.mark) {
        parse_mark(*cfg.mark);
    }

    auto transient = [&](double lambda, const char* key) {
        if (!(lambda > 0.0) || !(lambda < law->mean())) {
            std::ostringstream os;
            os.precision(17);
            os << "--" << key << " = " << lambda << " is outside (0, m) with m = " << law->mean()
               << "; the walk is not transient";
            fail(ErrorCode::NotTransient, os.str());
        }
    };
    if (cfg.step <= 0.0 || !std::isfinite(cfg.step)) {
        fail(ErrorCode::InvalidArgument, "--step must be positive");
    }
    if (cfg.step > 1e-3) {
        fail(ErrorCode::StepTooCoarse, "--step must be at most 1e-3");
    }
    if (cfg.iters < 1) {
        fail(ErrorCode::InvalidArgument, "--iters must be >= 1");
    }
    if (command == Command::BetaDensity || command == Command::McVerify) {
        transient(*cfg.lambda, "lambda");
    }
    if (command == Command::Sweep) {
        transient(*cfg.lambda_min, "lambda-min");
        transient(*cfg.lambda_max, "lambda-max");
        if (cfg.points < 1) {
            fail(ErrorCode::InvalidArgument, "--points must be >= 1");
        }
        if (*cfg.lambda_min > *cfg.lambda_max || (cfg.points > 1 && *cfg.lambda_min == *cfg.lambda_max)) {
            fail(ErrorCode::InvalidArgument, "--lambda-min must be below --lambda-max");
        }
    }
    if (command == Command::RecursiveLengths) {
        if (cfg.pool < 1000) {
            fail(ErrorCode::InvalidArgument, "--pool must be at least 1000");
        }
        if (cfg.gens < 1) {
            fail(ErrorCode::InvalidArgument, "--gens must be >= 1");
        }
    }
    if (command == Command::McVerify) {
        if (cfg.horizon < 1) {
            fail(ErrorCode::InvalidArgument, "--horizon must be >= 1");
        }
        if (cfg.depth <= cfg.horizon) {
            fail(ErrorCode::InvalidArgument, "--depth must exceed --horizon");
        }
        if (cfg.window < -1) {
            fail(ErrorCode::InvalidArgument, "--window must be >= 0, or -1 for automatic");
        }
        if (cfg.trees < 2 || cfg.walks < 1 || cfg.steps < 1) {
            fail(ErrorCode::InvalidArgument, "--trees must be >= 2, --walks and --steps >= 1");
        }
        if (cfg.stat_trees == 1 || cfg.stat_depth < 1) {
            fail(ErrorCode::InvalidArgument, "--stat-trees must be 0 or >= 2 and --stat-depth >= 1");
        }
    }
    if (command == Command::KernelTest && cfg.samples < 1) {
        fail(ErrorCode::InvalidArgument, "--samples must be >= 1");
    }

    // Record every effective value (defaults included) so runs can be replayed.
    auto& r = cfg.resolved;
    if (cfg.offspring) r["offspring"] = law->description();
    if (cfg.mark) r["mark"] = parse_mark(*cfg.mark).description();
    if (cfg.lambda) r["lambda"] = format_double(*cfg.lambda);
    if (cfg.lambda_min) r["lambda-min"] = format_double(*cfg.lambda_min);
    if (cfg.lambda_max) r["lambda-max"] = format_double(*cfg.lambda_max);
    r["points"] = std::to_string(cfg.points);
    r["step"] = format_double(cfg.step);
    r["iters"] = std::to_string(cfg.iters);
    r["pool"] = std::to_string(cfg.pool);
    r["gens"] = std::to_string(cfg.gens);
    r["depth"] = std::to_string(cfg.depth);
    r["horizon"] = std::to_string(cfg.horizon);
    r["window"] = std::to_string(cfg.window);
    r["trees"] = std::to_string(cfg.trees);
    r["steps"] = std::to_string(cfg.steps);
    r["walks"] = std::to_string(cfg.walks);
    r["stat-trees"] = std::to_string(cfg.stat_trees);
    r["stat-depth"] = std::to_string(cfg.stat_depth);
    r["samples"] = std::to_string(cfg.samples);
    const auto& used = command_keys(command);
    for (auto it = r.begin(); it != r.end();) {
        const bool keep = !is_path_key(it->first) && std::find(used.begin(), used.end(), it->first) != used.end();
        it = keep ? std::next(it) : r.erase(it);
    }
    return cfg;
}

OffspringLaw parse_offspring(const std::string& raw) {
    std::string spec = trim(raw);
    if (spec.empty()) {
        parse_fail("empty offspring spec");
    }
    std::string name;
    std::string args;
    if (call_form(spec, name, args)) {
        if (name != "lin") {
            parse_fail("unknown offspring family '" + name + "'");
        }
        const auto a = named_args(args, {"alpha", "eps"}, spec);
        if (a.count("alpha") == 0) {
            parse_fail("lin(...) needs alpha");
        }
        return a.count("eps") != 0 ? lin_offspring(a.at("alpha"), a.at("eps")) : lin_offspring(a.at("alpha"));
    }
    if (spec.front() == '{') {
        if (spec.back() != '}') {
            parse_fail("unbalanced braces in '" + spec + "'");
        }
        spec = spec.substr(1, spec.size() - 2);
    }
    std::map<int, double> raw_pmf;
    for (const auto& item : split(spec, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            parse_fail("expected k:p in offspring spec, got '" + item + "'");
        }
        const std::string ks = trim(item.substr(0, colon));
        int k = 0;
        const auto [ptr, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), k);
        if (ec != std::errc() || ptr != ks.data() + ks.size() || ks.empty()) {
            parse_fail("bad child count '" + ks + "' in offspring spec");
        }
        if (raw_pmf.count(k) != 0) {
            parse_fail("child count " + ks + " listed twice");
        }
        raw_pmf[k] = parse_probability(trim(item.substr(colon + 1)), "offspring spec");
    }
    return validate_offspring(raw_pmf);
}

MarkLaw parse_mark(const std::string& raw) {
    const std::string spec = trim(raw);
    if (spec == "inverse_uniform") {
        return MarkLaw::inverse_uniform();
    }
    std::string name;
    std::string args;
    if (!call_form(spec, name, args)) {
        parse_fail("unknown mark law '" + spec + "'");
    }
    if (name == "point_mass") {
        const auto a = named_args(args, {"g"}, spec);
        if (a.count("g") == 0) {
            parse_fail("point_mass(...) needs a value");
        }
        return MarkLaw::point_mass(a.at("g"));
    }
    if (name == "pareto_tail") {
        const auto a = named_args(args, {"a", "C"}, spec);
        if (a.count("a") == 0) {
            parse_fail("pareto_tail(...) needs a");
        }
        return MarkLaw::pareto_tail(a.at("a"), a.count("C") != 0 ? a.at("C") : 1.0);
    }
    if (name == "empirical") {
        const std::string path = trim(args);
        std::ifstream in(path);
        if (!in) {
            fail(ErrorCode::IoError, "cannot open mark sample file '" + path + "'");
        }
        std::vector<double> samples;
        std::string token;
        while (in >> token) {
            samples.push_back(parse_number(token, path));
        }
        return MarkLaw::empirical(std::move(samples));
    }
    parse_fail("unknown mark law '" + name + "'");
}

std::string format_double(double x) {
    if (std::isnan(x)) {
        return "nan";
    }
    if (std::isinf(x)) {
        return x > 0 ? "inf" : "-inf";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_csv(std::ostream& os, const CsvTable& table) {
    for (const auto& [k, v] : table.meta) {
        os << "# " << k << "=" << v << "\n";
    }
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        os << (i ? "," : "") << table.columns[i];
    }
    os << "\n";
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << row[i];
        }
        os << "\n";
    }
}

void write_csv(const std::string& path, const CsvTable& table) {
    if (path.empty() || path == "-") {
        write_csv(std::cout, table);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    }
    write_csv(out, table);
    out.close();
    if (!out) {
        fail(ErrorCode::IoError, "failed writing '" + path + "'");
    }
}

std::vector<std::pair<std::string, std::string>> run_metadata(const RunConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> meta;
    meta.emplace_back("command", to_string(cfg.command));
    for (const auto& [k, v] : cfg.resolved) {
        meta.emplace_back(k, v);
    }
    meta.emplace_back("seed", std::to_string(cfg.seed));
    meta.emplace_back("workers", std::to_string(cfg.workers));
    meta.emplace_back("version", kVersion);
    return meta;
}

} // namespace gwharm
