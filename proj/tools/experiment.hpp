#pragma once

// Experiment configuration (JSON), validation, dispatch to the library and
// report/CSV emission for the semilin command-line tool.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "semilin/certify.hpp"
#include "semilin/foliation.hpp"
#include "semilin/jacobi.hpp"
#include "semilin/odeflow.hpp"
#include "semilin/potential.hpp"
#include "semilin/rigidity.hpp"

namespace experiment {

inline constexpr const char* kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BumpSpec {
    double center = 0.0;
    double width = 1.0;
    double amplitude = 0.0;
    semilin::BumpFunction make() const { return semilin::make_bump(center, width, amplitude); }
};

struct PotentialSpec {
    std::string kind = "zero";  // zero | product | example446
    // zero
    double u_bound = 1.0;
    double r_outer = 1.0;
    // product: V = scale * f(u) g(r)
    BumpSpec u_factor;
    BumpSpec r_factor{2.0, 1.0, 1.0};
    double scale = 1.0;
    // example446
    BumpSpec phi;
    BumpSpec psi{0.0, 1.0, 1.0};
    std::string variant = "auto";  // auto | chain_rule | as_printed
};

struct GridSpec {
    std::vector<double> values;
};

struct Config {
    std::string command;
    int n = 3;
    PotentialSpec potential;
    semilin::IntegratorConfig integrator;
    int grid_density = semilin::kDefaultGridDensity;
    std::uint64_t seed = 0;
    unsigned jobs = 1;

    // certify
    std::vector<std::string> conditions{"A", "B"};
    double x0_offset = 0.0;
    int condition_a_grid = semilin::kConditionAGrid;

    // solve
    double r0 = 1.0;
    double u0 = 0.0;
    double du0 = 0.0;
    double r_end = 10.0;
    int samples = 1001;
    bool jacobi = false;
    double xi0 = 0.0;
    double dxi0 = 1.0;
    std::string jacobi_mode = "log";

    // scan-conjugate
    std::optional<std::vector<double>> u0_grid;
    std::optional<std::vector<double>> p0_grid;
    std::optional<double> t_start;
    std::optional<double> t_end;
    int slide_points = 8;

    // foliate
    std::string family = "NA";
    double A = 0.0;
    std::vector<double> alphas{-1.0, -0.5, 0.0, 0.5, 1.0};
    double r_min = 1e-4;
    double r_start = 0.0;
    double family_r_end = 0.0;
    int grid_points = 512;

    // rigidity-scaling
    std::vector<int> N_list{4, 8, 16, 32};
    double quad_tol = 1e-10;
    double slope_tolerance = 0.15;

    // example446
    std::optional<std::vector<double>> leaf_u0;

    // hardy-check
    int hardy_samples = 20;
    int hardy_modes = 4;
    double hardy_r1 = 0.0;
    double hardy_r2 = 1.0;
};

namespace detail {

inline const std::set<std::string>& commands() {
    static const std::set<std::string> c{"certify",          "solve",      "scan-conjugate", "foliate",
                                         "rigidity-scaling", "example446", "hardy-check"};
    return c;
}

/// Object reader that records consumed keys and rejects the rest.
class Reader {
public:
    Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + " must be an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    double number(const std::string& k, double fallback) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_number()) throw ConfigError("field '" + where(k) + "' must be a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) throw ConfigError("field '" + where(k) + "' must be finite");
        return x;
    }
    double positive(const std::string& k, double fallback) {
        const double x = number(k, fallback);
        if (!(x > 0.0)) throw ConfigError("field '" + where(k) + "' must be positive");
        return x;
    }
    std::optional<double> maybe_number(const std::string& k) {
        if (!has(k)) return std::nullopt;
        return number(k, 0.0);
    }
    int integer(const std::string& k, int fallback, int min_value) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_number_integer()) throw ConfigError("field '" + where(k) + "' must be an integer");
        const auto x = v.get<std::int64_t>();
        if (x < min_value || x > 1'000'000'000)
            throw ConfigError("field '" + where(k) + "' must be >= " + std::to_string(min_value));
        return static_cast<int>(x);
    }
    bool boolean(const std::string& k, bool fallback) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_boolean()) throw ConfigError("field '" + where(k) + "' must be a boolean");
        return v.get<bool>();
    }
    std::string choice(const std::string& k, const std::string& fallback, const std::set<std::string>& allowed) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_string()) throw ConfigError("field '" + where(k) + "' must be a string");
        const auto s = v.get<std::string>();
        if (!allowed.count(s)) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
            throw ConfigError("field '" + where(k) + "' has invalid value '" + s + "' (expected one of: " +
                              opts + ")");
        }
        return s;
    }
    /// Either a list of numbers or {"min", "max", "points"}.
    std::optional<std::vector<double>> grid(const std::string& k) {
        if (!take(k)) return std::nullopt;
        const auto& v = j_.at(k);
        std::vector<double> out;
        if (v.is_array()) {
            for (const auto& x : v) {
                if (!x.is_number()) throw ConfigError("field '" + where(k) + "' must contain numbers only");
                out.push_back(x.get<double>());
            }
        } else if (v.is_object()) {
            Reader g(v, where(k));
            const double lo = g.number("min", 0.0);
            const double hi = g.number("max", 1.0);
            const int pts = g.integer("points", 11, 1);
            g.finish();
            if (pts == 1) {
                out.push_back(lo);
            } else {
                for (int i = 0; i < pts; ++i) out.push_back(lo + (hi - lo) * i / (pts - 1));
            }
        } else {
            throw ConfigError("field '" + where(k) + "' must be a list or {min, max, points}");
        }
        if (out.empty()) throw ConfigError("field '" + where(k) + "' must be nonempty");
        for (double x : out)
            if (!std::isfinite(x)) throw ConfigError("field '" + where(k) + "' must be finite");
        return out;
    }
    std::vector<int> int_list(const std::string& k, const std::vector<int>& fallback) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_array()) throw ConfigError("field '" + where(k) + "' must be a list of integers");
        std::vector<int> out;
        for (const auto& x : v) {
            if (!x.is_number_integer()) throw ConfigError("field '" + where(k) + "' must be a list of integers");
            out.push_back(x.get<int>());
        }
        return out;
    }
    std::vector<std::string> string_list(const std::string& k, const std::vector<std::string>& fallback,
                                         const std::set<std::string>& allowed) {
        if (!take(k)) return fallback;
        const auto& v = j_.at(k);
        if (!v.is_array() || v.empty()) throw ConfigError("field '" + where(k) + "' must be a nonempty list");
        std::vector<std::string> out;
        for (const auto& x : v) {
            if (!x.is_string() || !allowed.count(x.get<std::string>()))
                throw ConfigError("field '" + where(k) + "' has an invalid entry");
            out.push_back(x.get<std::string>());
        }
        return out;
    }
    std::optional<Reader> object(const std::string& k) {
        if (!take(k)) return std::nullopt;
        return Reader(j_.at(k), where(k));
    }
    BumpSpec bump(const std::string& k, const BumpSpec& fallback) {
        auto r = object(k);
        if (!r) return fallback;
        BumpSpec b;
        b.center = r->number("center", fallback.center);
        b.width = r->positive("width", fallback.width);
        b.amplitude = r->number("amplitude", fallback.amplitude);
        r->finish();
        return b;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key '" + where(it.key()) + "'");
    }

private:
    bool take(const std::string& k) {
        seen_.insert(k);
        return j_.contains(k) && !j_.at(k).is_null();
    }
    std::string where(const std::string& k) const {
        if (path_.empty()) return k;
        return k.empty() ? path_ : path_ + "." + k;
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

/// Parses and validates a config document. Every key is checked; unknown
/// keys and wrong types raise ConfigError naming the field.
inline Config parse_config(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text, nullptr, true, true);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    detail::Reader root(doc, "");
    Config c;
    c.command = root.choice("command", "", detail::commands());
    if (c.command.empty()) throw ConfigError("field 'command' is required");
    const bool two_dim = c.command == "scan-conjugate" || c.command == "rigidity-scaling" ||
                         c.command == "example446";
    c.n = root.integer("n", two_dim ? 2 : 3, 2);
    if (two_dim && c.n != 2) throw ConfigError("field 'n' must be 2 for command " + c.command);
    if ((c.command == "certify" || c.command == "foliate" || c.command == "hardy-check") && c.n < 3)
        throw ConfigError("field 'n' must be >= 3 for command " + c.command);
    c.seed = static_cast<std::uint64_t>(root.integer("seed", 0, 0));
    c.grid_density = root.integer("grid_density", c.grid_density, 2);

    if (auto p = root.object("potential")) {
        auto& s = c.potential;
        s.kind = p->choice("kind", "zero", {"zero", "product", "example446"});
        s.u_bound = p->positive("u_bound", s.u_bound);
        s.r_outer = p->positive("r_outer", s.r_outer);
        s.u_factor = p->bump("u_factor", s.u_factor);
        s.r_factor = p->bump("r_factor", s.r_factor);
        s.scale = p->number("scale", s.scale);
        s.phi = p->bump("phi", s.phi);
        s.psi = p->bump("psi", s.psi);
        s.variant = p->choice("variant", s.variant, {"auto", "chain_rule", "as_printed"});
        p->finish();
        if (s.kind == "product" && !(s.r_factor.center - s.r_factor.width > 0.0))
            throw ConfigError("field 'potential.r_factor' must be supported in r > 0");
        if (s.kind == "example446" && c.n != 2)
            throw ConfigError("field 'potential.kind' example446 requires n = 2");
    } else if (c.command == "example446") {
        throw ConfigError("field 'potential' is required for command example446");
    }
    if (c.command == "example446" && c.potential.kind != "example446")
        throw ConfigError("field 'potential.kind' must be example446 for command example446");

    if (auto g = root.object("integrator")) {
        auto& i = c.integrator;
        i.rel_tol = g->positive("rel_tol", i.rel_tol);
        i.abs_tol = g->positive("abs_tol", i.abs_tol);
        i.max_step = g->positive("max_step", i.max_step);
        i.event_tol = g->positive("event_tol", i.event_tol);
        g->finish();
    }

    if (auto s = root.object("certify")) {
        c.conditions = s->string_list("conditions", c.conditions, {"A", "B"});
        c.x0_offset = s->number("x0_offset", c.x0_offset);
        c.condition_a_grid = s->integer("grid_points", c.condition_a_grid, 2);
        s->finish();
    }
    if (auto s = root.object("solve")) {
        c.r0 = s->positive("r0", c.r0);
        c.u0 = s->number("u0", c.u0);
        c.du0 = s->number("du0", c.du0);
        c.r_end = s->positive("r_end", c.r_end);
        c.samples = s->integer("samples", c.samples, 2);
        c.jacobi = s->boolean("jacobi", c.jacobi);
        c.xi0 = s->number("xi0", c.xi0);
        c.dxi0 = s->number("dxi0", c.dxi0);
        c.jacobi_mode = s->choice("jacobi_mode", c.jacobi_mode, {"log", "radial"});
        s->finish();
        if (c.r0 == c.r_end) throw ConfigError("field 'solve.r_end' must differ from solve.r0");
    }
    if (auto s = root.object("scan")) {
        c.u0_grid = s->grid("u0_grid");
        c.p0_grid = s->grid("p0_grid");
        c.t_start = s->maybe_number("t_start");
        c.t_end = s->maybe_number("t_end");
        c.slide_points = s->integer("slide_points", c.slide_points, 1);
        s->finish();
    }
    if (auto s = root.object("foliate")) {
        c.family = s->choice("family", c.family, {"NA", "MA"});
        c.A = s->number("A", c.A);
        if (auto a = s->grid("alphas")) c.alphas = *a;
        c.r_min = s->positive("r_min", c.r_min);
        c.r_start = s->number("r_start", c.r_start);
        c.family_r_end = s->number("r_end", c.family_r_end);
        c.grid_points = s->integer("grid_points", c.grid_points, 2);
        s->finish();
        for (std::size_t i = 1; i < c.alphas.size(); ++i)
            if (!(c.alphas[i] > c.alphas[i - 1]))
                throw ConfigError("field 'foliate.alphas' must be strictly increasing");
    }
    if (auto s = root.object("rigidity")) {
        c.N_list = s->int_list("N_list", c.N_list);
        c.quad_tol = s->positive("quad_tol", c.quad_tol);
        c.slope_tolerance = s->positive("slope_tolerance", c.slope_tolerance);
        s->finish();
        if (c.N_list.size() < 3) throw ConfigError("field 'rigidity.N_list' needs at least three entries");
        for (std::size_t i = 0; i < c.N_list.size(); ++i)
            if (c.N_list[i] < 1 || (i > 0 && c.N_list[i] <= c.N_list[i - 1]))
                throw ConfigError("field 'rigidity.N_list' must be strictly increasing integers >= 1");
    }
    if (auto s = root.object("example446")) {
        c.leaf_u0 = s->grid("u0_grid");
        s->finish();
    }
    if (auto s = root.object("hardy")) {
        c.hardy_samples = s->integer("samples", c.hardy_samples, 1);
        c.hardy_modes = s->integer("modes", c.hardy_modes, 0);
        c.hardy_r1 = s->number("r1", c.hardy_r1);
        c.hardy_r2 = s->number("r2", c.hardy_r2);
        s->finish();
        if (!(c.hardy_r1 >= 0.0) || !(c.hardy_r2 > c.hardy_r1))
            throw ConfigError("field 'hardy' needs 0 <= r1 < r2");
    }
    root.finish();
    return c;
}

inline Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// The validated configuration with every default filled in.
inline Json config_echo(const Config& c) {
    Json j;
    j["command"] = c.command;
    j["n"] = c.n;
    j["seed"] = c.seed;
    j["grid_density"] = c.grid_density;
    auto bump = [](const BumpSpec& b) {
        return Json{{"center", b.center}, {"width", b.width}, {"amplitude", b.amplitude}};
    };
    Json p;
    p["kind"] = c.potential.kind;
    if (c.potential.kind == "zero") {
        p["u_bound"] = c.potential.u_bound;
        p["r_outer"] = c.potential.r_outer;
    } else if (c.potential.kind == "product") {
        p["u_factor"] = bump(c.potential.u_factor);
        p["r_factor"] = bump(c.potential.r_factor);
        p["scale"] = c.potential.scale;
    } else {
        p["phi"] = bump(c.potential.phi);
        p["psi"] = bump(c.potential.psi);
        p["variant"] = c.potential.variant;
    }
    j["potential"] = p;
    j["integrator"] = Json{{"rel_tol", c.integrator.rel_tol},
                           {"abs_tol", c.integrator.abs_tol},
                           {"max_step", c.integrator.max_step},
                           {"event_tol", c.integrator.event_tol}};
    if (c.command == "certify") {
        j["certify"] = Json{{"conditions", c.conditions},
                            {"x0_offset", c.x0_offset},
                            {"grid_points", c.condition_a_grid}};
    } else if (c.command == "solve") {
        j["solve"] = Json{{"r0", c.r0},         {"u0", c.u0},         {"du0", c.du0},
                          {"r_end", c.r_end},   {"samples", c.samples}, {"jacobi", c.jacobi},
                          {"xi0", c.xi0},       {"dxi0", c.dxi0},     {"jacobi_mode", c.jacobi_mode}};
    } else if (c.command == "scan-conjugate") {
        Json s;
        if (c.u0_grid) s["u0_grid"] = *c.u0_grid;
        if (c.p0_grid) s["p0_grid"] = *c.p0_grid;
        if (c.t_start) s["t_start"] = *c.t_start;
        if (c.t_end) s["t_end"] = *c.t_end;
        s["slide_points"] = c.slide_points;
        j["scan"] = s;
    } else if (c.command == "foliate") {
        j["foliate"] = Json{{"family", c.family},   {"A", c.A},         {"alphas", c.alphas},
                            {"r_min", c.r_min},     {"r_start", c.r_start}, {"r_end", c.family_r_end},
                            {"grid_points", c.grid_points}};
    } else if (c.command == "rigidity-scaling") {
        j["rigidity"] = Json{{"N_list", c.N_list}, {"quad_tol", c.quad_tol}, {"slope_tolerance", c.slope_tolerance}};
    } else if (c.command == "example446") {
        Json s = Json::object();
        if (c.leaf_u0) s["u0_grid"] = *c.leaf_u0;
        j["example446"] = s;
    } else if (c.command == "hardy-check") {
        j["hardy"] = Json{{"samples", c.hardy_samples},
                          {"modes", c.hardy_modes},
                          {"r1", c.hardy_r1},
                          {"r2", c.hardy_r2}};
    }
    return j;
}

inline semilin::RadialPotential make_radial(const Config& c) {
    const auto& s = c.potential;
    if (s.kind == "zero") return semilin::make_zero_potential(s.u_bound, s.r_outer);
    if (s.kind == "product") {
        auto v = semilin::product_potential(s.u_factor.make(), s.r_factor.make());
        return s.scale == 1.0 ? v : semilin::scale_potential(v, s.scale);
    }
    throw semilin::Inapplicable("example446 potentials are defined in log time only");
}

inline semilin::Example446Variant resolve_variant(const Config& c) {
    const auto& s = c.potential;
    if (s.variant == "chain_rule") return semilin::Example446Variant::ChainRule;
    if (s.variant == "as_printed") return semilin::Example446Variant::AsPrinted;
    return semilin::select_example446_variant(s.phi.make(), s.psi.make(), c.integrator).selected;
}

inline semilin::LogPotential make_log(const Config& c) {
    const auto& s = c.potential;
    if (s.kind == "example446")
        return semilin::example_446_potential(s.phi.make(), s.psi.make(), resolve_variant(c), c.grid_density);
    return semilin::to_log_form(make_radial(c), c.grid_density);
}

/// Fixed-format doubles so reruns are byte-identical.
inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

/// JSON number for finite values, null otherwise.
inline Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : cols_(header.size()) { row_strings(header); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> s;
        for (double v : values) s.push_back(fmt(v));
        row_strings(s);
    }
    void row_strings(const std::vector<std::string>& cells) {
        if (cells.size() != cols_) throw std::logic_error("CSV row has the wrong number of fields");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(cells[i]);
        }
        out_ << "\r\n";
    }
    std::string str() const { return out_.str(); }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char ch : s) {
            if (ch == '"') q += '"';
            q += ch;
        }
        return q + "\"";
    }
    std::size_t cols_;
    std::ostringstream out_;
};

struct RunResult {
    Json report;
    int exit_code = 0;
    /// File name -> contents, written next to report.json.
    std::vector<std::pair<std::string, std::string>> files;
};

namespace detail {

inline Json cert_json(const semilin::Certificate& c) {
    Json j;
    j["condition"] = semilin::to_string(c.condition);
    j["n"] = c.n;
    j["margin"] = num(c.margin);
    Json g;
    g["r_lo"] = c.r_lo;
    g["r_hi"] = c.r_hi;
    if (c.condition == semilin::Certificate::Condition::A) {
        g["points"] = c.grid_points;
        g["worst_r"] = c.worst_r;
        g["x0_offset"] = c.x0_offset;
    } else {
        g["norm"] = num(c.norm);
        g["threshold"] = c.threshold;
    }
    j["grid"] = g;
    j["verdict"] = c.certified() ? "certified" : "not_certified";
    return j;
}

inline RunResult run_certify(const Config& c) {
    const auto v = make_radial(c);
    RunResult out;
    Json certs = Json::array();
    bool all = true;
    for (const auto& name : c.conditions) {
        const auto cert = name == "A"
                              ? semilin::check_condition_A(v, c.n, c.x0_offset, c.condition_a_grid, c.grid_density)
                              : semilin::check_condition_B(v, c.n, c.grid_density);
        all = all && cert.certified();
        certs.push_back(cert_json(cert));
    }
    out.report["results"] = Json{{"certificates", certs}};
    out.report["verdict"] = all ? "certified" : "not_certified";
    out.exit_code = all ? 0 : 1;
    return out;
}

inline RunResult run_solve(const Config& c) {
    const auto w = make_log(c);
    const double t0 = std::log(c.r0);
    const double t1 = std::log(c.r_end);
    const auto cfg = c.integrator.with_range(t0, t1);
    const auto traj = semilin::integrate_radial_ivp(w, c.n, c.r0, c.u0, c.du0, cfg);
    RunResult out;

    CsvWriter csv({"t", "r", "u", "p", "H"});
    for (int i = 0; i < c.samples; ++i) {
        const double t = t0 + (t1 - t0) * i / (c.samples - 1);
        const auto s = traj.at(t);
        csv.row({t, std::exp(t), s.u, s.p, semilin::hamiltonian_value(w, s)});
    }
    out.files.emplace_back("trajectory.csv", csv.str());

    Json ev = Json::array();
    for (const auto& e : traj.events()) ev.push_back(Json{{"t", e.t}, {"r", std::exp(e.t)}, {"kind", semilin::to_string(e.kind)}});
    out.files.emplace_back("events.json", Json{{"events", ev}}.dump(2) + "\n");

    const auto end = traj.at(t1);
    Json res;
    res["t_range"] = Json::array({t0, t1});
    res["final_state"] = Json{{"t", t1}, {"r", c.r_end}, {"u", end.u}, {"p", end.p}};
    res["events"] = ev.size();
    res["K"] = w.K;
    res["T"] = w.T;

    if (c.jacobi) {
        const auto mode = c.jacobi_mode == "radial" ? semilin::JacobiMode::RadialForm : semilin::JacobiMode::LogForm;
        const auto field = semilin::integrate_jacobi(traj, c.xi0, c.dxi0, mode, cfg);
        const auto trace = semilin::riccati_from_jacobi(field);
        CsvWriter jc({"t", "xi", "xidot", "omega", "flags"});
        std::vector<std::string> row(5);
        for (int i = 0; i < c.samples; ++i) {
            const double t = t0 + (t1 - t0) * i / (c.samples - 1);
            const double x = field.xi(t);
            const double dx = field.xi_dot(t);
            const double om = x == 0.0 ? std::numeric_limits<double>::infinity() : dx / x;
            std::string flags;
            if (!(std::abs(om) <= semilin::kRiccatiBlowupCap)) flags = "blowup";
            row = {fmt(t), fmt(x), fmt(dx), fmt(om), flags};
            jc.row_strings(row);
        }
        out.files.emplace_back("jacobi.csv", jc.str());
        Json zs = Json::array();
        for (const auto& z : field.zeros()) zs.push_back(z.t);
        Json bs = Json::array();
        for (double b : trace.blowups()) bs.push_back(b);
        res["jacobi"] = Json{{"zeros", zs}, {"degenerate_zeros", field.degenerate_zeros()}, {"riccati_blowups", bs}};
    }
    out.report["results"] = res;
    out.report["verdict"] = "solved";
    return out;
}

inline RunResult run_scan(const Config& c) {
    const auto w = make_log(c);
    auto [du, dp] = semilin::default_scan_grids(w);
    const auto u = c.u0_grid.value_or(du);
    const auto p = c.p0_grid.value_or(dp);
    const double ts = c.t_start.value_or(semilin::detail::quadrature_t_lower(w));
    const double te = c.t_end.value_or(w.T + 10.0);
    const auto scan = semilin::conjugate_point_scan(w, u, p, ts, te, c.integrator, {c.slide_points, c.jobs});
    RunResult out;
    CsvWriter csv({"u0", "p0", "t1", "t2"});
    Json findings = Json::array();
    double worst = 0.0;
    for (const auto& f : scan.findings) {
        csv.row({f.u0, f.p0, f.t1, f.t2});
        const double check = semilin::verify_finding(w, f, c.integrator);
        worst = std::max(worst, check);
        findings.push_back(Json{{"u0", f.u0}, {"p0", f.p0}, {"t_start", f.t_start}, {"t1", f.t1}, {"t2", f.t2}, {"xi_at_t2", check}});
    }
    out.files.emplace_back("findings.csv", csv.str());
    Json fails = Json::array();
    for (const auto& f : scan.failures) fails.push_back(Json{{"u0", f.u0}, {"p0", f.p0}, {"message", f.message}});
    Json res;
    res["grid"] = Json{{"u0_points", u.size()}, {"p0_points", p.size()}, {"t_start", ts}, {"t_end", te}, {"cells", scan.cells}};
    res["K"] = w.K;
    res["T"] = w.T;
    res["findings"] = findings;
    res["failures"] = fails;
    res["max_verification_residual"] = worst;
    out.report["results"] = res;
    const bool found = !scan.findings.empty();
    out.report["verdict"] = found ? "findings" : "no_findings";
    out.exit_code = found ? 0 : 1;
    return out;
}

inline RunResult run_foliate(const Config& c) {
    const auto v = make_radial(c);
    semilin::FamilyOptions opt;
    opt.r_min = c.r_min;
    opt.r_start = c.r_start;
    opt.r_end = c.family_r_end;
    opt.grid_points = c.grid_points;
    opt.jobs = c.jobs;
    const auto fam = c.family == "NA" ? semilin::build_NA_family(v, c.n, c.A, c.alphas, c.integrator, opt)
                                      : semilin::build_MA_family(v, c.n, c.A, c.alphas, c.integrator, opt);
    const auto rep = semilin::check_ordering(fam);
    RunResult out;
    std::vector<std::string> header{"r"};
    for (double a : fam.alphas) header.push_back("alpha=" + fmt(a));
    CsvWriter csv(header);
    for (std::size_t k = 0; k < fam.r_grid.size(); ++k) {
        std::vector<double> row{fam.r_grid[k]};
        for (const auto& leaf : fam.u) row.push_back(leaf[k]);
        csv.row(row);
    }
    out.files.emplace_back("family.csv", csv.str());
    Json res;
    res["family"] = c.family;
    res["leaves"] = fam.alphas.size();
    res["r_grid"] = Json{{"points", fam.r_grid.size()}, {"r_lo", fam.r_grid.front()}, {"r_hi", fam.r_grid.back()}};
    Json gaps = Json::array();
    for (double g : rep.gaps) gaps.push_back(num(g));
    res["gaps"] = gaps;
    res["min_gap"] = num(rep.min_gap);
    res["min_dudalpha"] = num(rep.min_dudalpha);
    res["degenerate_input"] = rep.degenerate_input;
    out.report["results"] = res;
    out.report["verdict"] = rep.ordered() ? "ordered" : "not_ordered";
    out.exit_code = rep.ordered() ? 0 : 1;
    return out;
}

inline RunResult run_rigidity(const Config& c) {
    const auto w = make_log(c);
    const auto fit = semilin::scaling_exponent_fit(w, c.N_list, c.quad_tol, c.jobs);
    RunResult out;
    CsvWriter csv({"N", "lhs", "rhs"});
    Json sides = Json::array();
    for (std::size_t i = 0; i < fit.Ns.size(); ++i) {
        csv.row({fit.Ns[i], fit.sides[i].lhs, fit.sides[i].rhs});
        sides.push_back(Json{{"N", static_cast<int>(fit.Ns[i])}, {"lhs", fit.sides[i].lhs}, {"rhs", fit.sides[i].rhs}});
    }
    out.files.emplace_back("scaling.csv", csv.str());
    const auto disc = semilin::discriminant_inequality_check(w, c.quad_tol);
    Json res;
    res["sides"] = sides;
    res["identically_zero"] = fit.identically_zero;
    res["discriminant"] = Json{{"lhs", disc.lhs}, {"rhs", disc.rhs}, {"holds", disc.holds}};
    if (fit.identically_zero) {
        res["slope_lhs"] = nullptr;
        res["slope_rhs"] = nullptr;
        res["crossover_N"] = nullptr;
        res["first_crossover_N"] = nullptr;
        out.report["results"] = res;
        out.report["verdict"] = "identically_zero";
        out.exit_code = 1;
        return out;
    }
    res["slope_lhs"] = fit.slope_lhs;
    res["slope_rhs"] = fit.slope_rhs;
    res["crossover_N"] = fit.crossover_N ? Json(*fit.crossover_N) : Json(nullptr);
    const auto first = semilin::find_crossover(w, c.quad_tol);
    res["first_crossover_N"] = first ? Json(*first) : Json(nullptr);
    const bool ok = std::abs(fit.slope_lhs + 3.0) <= c.slope_tolerance &&
                    std::abs(fit.slope_rhs + 5.0) <= c.slope_tolerance && first.has_value();
    out.report["results"] = res;
    out.report["verdict"] = ok ? "scaling_confirmed" : "scaling_not_confirmed";
    out.exit_code = ok ? 0 : 1;
    return out;
}

inline RunResult run_example446(const Config& c) {
    const auto phi = c.potential.phi.make();
    const auto psi = c.potential.psi.make();
    const auto sel = semilin::select_example446_variant(phi, psi, c.integrator);
    const auto variant = c.potential.variant == "auto" ? sel.selected : resolve_variant(c);
    const auto grid = c.leaf_u0.value_or(semilin::default_example446_u0_grid(phi));
    const auto rep = semilin::example_446_check(phi, psi, grid, c.integrator, variant, c.jobs);
    RunResult out;
    std::vector<std::string> header{"t"};
    for (const auto& l : rep.leaves) header.push_back("u0=" + fmt(l.u0));
    CsvWriter csv(header);
    const int samples = 401;
    for (int k = 0; k < samples; ++k) {
        const double t = rep.t_window.first + (rep.t_window.second - rep.t_window.first) * k / (samples - 1);
        std::vector<double> row{t};
        for (const auto& l : rep.leaves) row.push_back(l.path(t)[0]);
        csv.row(row);
    }
    out.files.emplace_back("leaves.csv", csv.str());
    Json leaves = Json::array();
    for (const auto& l : rep.leaves) leaves.push_back(Json{{"u0", l.u0}, {"max_residual", l.max_residual}});
    Json res;
    res["variant"] = semilin::to_string(variant);
    res["variant_selection"] = Json{{"selected", semilin::to_string(sel.selected)},
                                    {"residual_chain_rule", sel.residual_chain_rule},
                                    {"residual_as_printed", sel.residual_as_printed}};
    res["t_window"] = Json::array({rep.t_window.first, rep.t_window.second});
    res["leaves"] = leaves;
    res["max_residual"] = rep.max_residual;
    res["initial_min_gap"] = num(rep.initial_min_gap);
    res["min_gap"] = num(rep.min_gap);
    res["crossings"] = rep.crossings;
    const bool ok = rep.non_crossing() && rep.max_residual <= 1e-7;
    out.report["results"] = res;
    out.report["verdict"] = ok ? "pass" : "fail";
    out.exit_code = ok ? 0 : 1;
    return out;
}

inline RunResult run_hardy(const Config& c) {
    std::mt19937_64 rng(c.seed);
    RunResult out;
    Json cases = Json::array();
    double worst = 0.0;
    double min_lhs = std::numeric_limits<double>::infinity();
    for (int k = 0; k < c.hardy_samples; ++k) {
        const auto xi = semilin::random_hardy_test_function(rng, c.hardy_r1, c.hardy_r2, c.hardy_modes);
        const auto s = semilin::hardy_identity_check(xi, c.n, c.hardy_r1, c.hardy_r2);
        const double rel = std::abs(s.lhs - s.rhs) / std::max(1.0, std::abs(s.rhs));
        worst = std::max(worst, rel);
        min_lhs = std::min(min_lhs, s.lhs);
        cases.push_back(Json{{"lhs", s.lhs}, {"rhs", s.rhs}, {"relative_difference", rel}});
    }
    const bool ok = worst <= 1e-8 && min_lhs >= -1e-10;
    out.report["results"] = Json{{"cases", cases}, {"max_relative_difference", worst}, {"min_lhs", min_lhs}};
    out.report["verdict"] = ok ? "pass" : "fail";
    out.exit_code = ok ? 0 : 1;
    return out;
}

}  // namespace detail

/// Runs the configured experiment. Library errors propagate to the caller.
inline RunResult run_command(const Config& c) {
    RunResult r;
    if (c.command == "certify") r = detail::run_certify(c);
    else if (c.command == "solve") r = detail::run_solve(c);
    else if (c.command == "scan-conjugate") r = detail::run_scan(c);
    else if (c.command == "foliate") r = detail::run_foliate(c);
    else if (c.command == "rigidity-scaling") r = detail::run_rigidity(c);
    else if (c.command == "example446") r = detail::run_example446(c);
    else if (c.command == "hardy-check") r = detail::run_hardy(c);
    else throw ConfigError("unknown command '" + c.command + "'");
    Json report;
    report["tool"] = "semilin";
    report["version"] = kToolVersion;
    report["command"] = c.command;
    report["config"] = config_echo(c);
    report["verdict"] = r.report["verdict"];
    report["exit_code"] = r.exit_code;
    report["results"] = r.report["results"];
    r.report = std::move(report);
    return r;
}

/// Report for a run that failed before or during execution.
inline Json error_report(const std::string& command, const std::string& message) {
    Json report;
    report["tool"] = "semilin";
    report["version"] = kToolVersion;
    report["command"] = command.empty() ? Json(nullptr) : Json(command);
    report["verdict"] = "error";
    report["exit_code"] = 2;
    report["error"] = message;
    return report;
}

inline void emit(const std::filesystem::path& dir, const Json& report,
                 const std::vector<std::pair<std::string, std::string>>& files) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot write '" + (dir / name).string() + "'");
        f << text;
        if (!f) throw std::runtime_error("write failed for '" + (dir / name).string() + "'");
    };
    for (const auto& [name, text] : files) write(name, text);
    write("report.json", report.dump(2) + "\n");
}

}  // namespace experiment
