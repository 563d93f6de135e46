#include "exwkb/cli.hpp"

#include <openssl/evp.h>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string_view>

#include <fftw3.h>

#include "CLI11.hpp"
#include "exwkb/borel_engine.hpp"
#include "exwkb/errors.hpp"
#include "exwkb/resummation.hpp"
#include "exwkb/trajectories.hpp"
#include "exwkb/wkb.hpp"

#ifndef EXWKB_VERSION
#define EXWKB_VERSION "0.0.0"
#endif

namespace exwkb::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Source positions for JSON diagnostics

struct LineCol {
    std::size_t line = 1;
    std::size_t col = 1;
};

LineCol line_col(const std::string& text, std::size_t offset) {
    LineCol lc;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
        if (text[i] == '\n') {
            ++lc.line;
            lc.col = 1;
        } else {
            ++lc.col;
        }
    }
    return lc;
}

// Input iterator that reports how many characters the lexer has consumed.
class CountingIterator {
public:
    using iterator_category = std::input_iterator_tag;
    using value_type = char;
    using difference_type = std::ptrdiff_t;
    using pointer = const char*;
    using reference = const char&;

    CountingIterator(const char* p, std::size_t* count) : p_(p), count_(count) {}
    reference operator*() const { return *p_; }
    CountingIterator& operator++() {
        ++p_;
        ++*count_;
        return *this;
    }
    CountingIterator operator++(int) {
        auto t = *this;
        ++*this;
        return t;
    }
    bool operator==(const CountingIterator& o) const { return p_ == o.p_; }
    bool operator!=(const CountingIterator& o) const { return p_ != o.p_; }

private:
    const char* p_;
    std::size_t* count_;
};

// Records the offset of every member key and array element by JSON pointer.
class Locator : public nlohmann::json_sax<json> {
public:
    Locator(const std::string& text, const std::size_t* consumed) : text_(text), consumed_(consumed) {}

    std::map<std::string, std::size_t> where;

    bool null() override { return scalar(); }
    bool boolean(bool) override { return scalar(); }
    bool number_integer(number_integer_t) override { return scalar(); }
    bool number_unsigned(number_unsigned_t) override { return scalar(); }
    bool number_float(number_float_t, const string_t&) override { return scalar(); }
    bool string(string_t&) override { return scalar(); }
    bool binary(binary_t&) override { return scalar(); }
    bool start_object(std::size_t) override {
        open(false);
        return true;
    }
    bool key(string_t& k) override {
        auto& f = stack_.back();
        f.key = escape(k);
        // the lexer has just passed the closing quote
        const std::size_t end = *consumed_ > 0 ? *consumed_ - 1 : 0;
        const std::size_t start = text_.rfind('"' + k + '"', end);
        where[f.path + "/" + f.key] = start == std::string::npos ? end : start;
        return true;
    }
    bool end_object() override {
        stack_.pop_back();
        return true;
    }
    bool start_array(std::size_t) override {
        open(true);
        return true;
    }
    bool end_array() override {
        stack_.pop_back();
        return true;
    }
    bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception&) override { return false; }

private:
    struct Frame {
        std::string path;
        bool array = false;
        int index = 0;
        std::string key;
    };

    static std::string escape(const std::string& k) {
        std::string s;
        for (char c : k) {
            if (c == '~') s += "~0";
            else if (c == '/') s += "~1";
            else s += c;
        }
        return s;
    }

    // Pointer of the value about to start; array elements are located here.
    std::string child() {
        if (stack_.empty()) return "";
        auto& f = stack_.back();
        if (!f.array) return f.path + "/" + f.key;
        const std::string p = f.path + "/" + std::to_string(f.index++);
        std::size_t at = *consumed_ > 0 ? *consumed_ - 1 : 0;
        while (at > 0 && (std::isspace(static_cast<unsigned char>(text_[at])) || text_[at] == ',' || text_[at] == ']'))
            --at;
        // back to the first character of the token
        while (at > 0 && !std::isspace(static_cast<unsigned char>(text_[at - 1])) &&
               std::string_view(",[:").find(text_[at - 1]) == std::string_view::npos)
            --at;
        where.emplace(p, at);
        return p;
    }
    bool scalar() {
        child();
        return true;
    }
    void open(bool array) {
        const std::string p = child();
        stack_.push_back({p, array, 0, {}});
    }

    const std::string& text_;
    const std::size_t* consumed_;
    std::vector<Frame> stack_;
};

class SpecReader {
public:
    SpecReader(const std::string& text, std::string name) : text_(text), name_(std::move(name)) {}

    json parse() {
        json j;
        try {
            j = json::parse(text_);
        } catch (const json::parse_error& e) {
            const auto lc = line_col(text_, e.byte > 0 ? e.byte - 1 : 0);
            std::string what = e.what();
            const auto colon = what.find(": ");
            if (colon != std::string::npos) what = what.substr(colon + 2);
            throw InputError(prefix(lc) + "malformed JSON: " + what);
        }
        std::size_t consumed = 0;
        Locator loc(text_, &consumed);
        json::sax_parse(CountingIterator(text_.data(), &consumed),
                        CountingIterator(text_.data() + text_.size(), &consumed), &loc);
        where_ = std::move(loc.where);
        return j;
    }

    [[noreturn]] void fail(const std::string& pointer, const std::string& msg) const {
        // walk up to the nearest located ancestor
        std::string p = pointer;
        while (!p.empty() && !where_.count(p)) p = p.substr(0, p.rfind('/'));
        const auto lc = p.empty() ? LineCol{} : line_col(text_, where_.at(p));
        throw InputError(prefix(lc) + msg);
    }

    void only_keys(const json& j, const std::string& pointer, std::initializer_list<const char*> keys) const {
        if (!j.is_object()) fail(pointer, "\"" + pointer + "\" must be an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            bool known = false;
            for (const char* k : keys) known |= it.key() == k;
            if (!known) fail(pointer + "/" + it.key(), "unknown key \"" + it.key() + "\"");
        }
    }

private:
    std::string prefix(const LineCol& lc) const {
        return name_ + ":" + std::to_string(lc.line) + ":" + std::to_string(lc.col) + ": ";
    }

    const std::string& text_;
    std::string name_;
    std::map<std::string, std::size_t> where_;
};

// ---------------------------------------------------------------------------
// Parameter validation

int get_int(const SpecReader& r, const json& j, const std::string& ptr, int lo, int hi) {
    if (!j.is_number_integer()) r.fail(ptr, ptr + " must be an integer");
    const auto v = j.get<long long>();
    if (v < lo || v > hi) {
        r.fail(ptr, ptr + " = " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "]");
    }
    return int(v);
}

double get_real(const SpecReader& r, const json& j, const std::string& ptr, double lo, double hi) {
    if (!j.is_number()) r.fail(ptr, ptr + " must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v) || v < lo || v > hi) {
        std::ostringstream os;
        os << ptr << " = " << v << " outside [" << lo << ", " << hi << "]";
        r.fail(ptr, os.str());
    }
    return v;
}

cplx get_complex(const SpecReader& r, const json& j, const std::string& ptr) {
    try {
        const cplx z = complex_from_json(j);
        if (!std::isfinite(std::abs(z))) r.fail(ptr, ptr + " must be finite");
        return z;
    } catch (const InputError& e) {
        r.fail(ptr, ptr + ": " + e.what());
    }
}

void check_params(const Params& p) {
    auto bad = [](const std::string& m) { throw InputError(m); };
    if (p.order < 1 || p.order > 40) bad("order must lie in [1, 40]");
    if (p.grid < 8 * p.order || p.grid > 65536) bad("grid must lie in [8 * order, 65536]");
    if (!std::isfinite(p.phase)) bad("phase must be finite");
    if (p.hbar.empty()) bad("hbar list must not be empty");
    for (const auto& h : p.hbar) {
        if (!(std::abs(h) > 0.0) || std::abs(h) > 1.0) bad("hbar values must satisfy 0 < |hbar| <= 1");
    }
    if (!(p.radius > 0.0) || p.radius > 1000.0) bad("radius must lie in (0, 1000]");
    if (p.depth < 0 || p.depth > 6) bad("depth must lie in [0, 6]");
    if (!(p.tau > 0.0) || p.tau > 100.0) bad("tau must lie in (0, 100]");
    if (p.phases < 4 || p.phases > 720) bad("phases must lie in [4, 720]");
    if (p.germ < 12 || p.germ > 60) bad("germ must lie in [12, 60]");
}

// ---------------------------------------------------------------------------
// Output

class Outputs {
public:
    explicit Outputs(std::filesystem::path dir) : dir_(std::move(dir)) {}

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        std::ofstream f(dir_ / name, std::ios::binary);
        if (!f) throw InputError("cannot write " + (dir_ / name).string());
        f << content;
        files_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
    }
    void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

    const json& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    json files_ = json::array();
};

json versions() {
    return {{"exwkb", EXWKB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"boost", BOOST_LIB_VERSION},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"fftw", std::string(fftw_version)},
            {"compiler", __VERSION__}};
}

json cplx_list(const std::vector<cplx>& v) {
    json j = json::array();
    for (const auto& z : v) j.push_back(complex_to_json(z));
    return j;
}

SpectralPoint basepoint(const ProblemSpec& s) {
    if (!s.x) throw InputError("this command needs a \"basepoint\"");
    return {*s.x, s.sheet};
}

// ---------------------------------------------------------------------------
// Commands

void cmd_classify(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    json cps = json::array();
    for (const auto& cp : classify(s.potential)) cps.push_back(to_json(cp));
    out.write_json("classify.json", {{"potential", s.potential.to_json()}, {"critical_points", cps}});
    log << cps.size() << " critical points\n";
}

void cmd_coeffs(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    const auto sp = basepoint(s);
    const int N = s.params.order;
    const auto w = wkb_recursion(s.potential, sp, N);
    const cplx y0 = w.y[0];
    std::vector<cplx> f;
    for (int k = 1; k < N; ++k) f.push_back(w.y[std::size_t(k + 1)] / (2.0 * y0));
    out.write_json("coeffs.json", {{"x", complex_to_json(sp.x)},
                                   {"sheet", sp.sheet},
                                   {"y", cplx_list(w.y)},
                                   {"lambda", cplx_list(formal_wkb_differential(s.potential, sp, N - 1))},
                                   {"f", cplx_list(f)},
                                   {"borel_germ", cplx_list(borel_germ(s.potential, sp.x, y0, N))}});
    log << "y_0.." << N << " at x = " << sp.x << "\n";
}

void cmd_stokes(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    const auto& p = s.potential;
    json j;
    if (s.x) {
        const auto d = stokes_diagram(p, basepoint(s), s.params.phases);
        j["diagram"] = to_json(d);
        log << d.critical.size() << " critical phases at x = " << *s.x << "\n";
    }
    const auto legs = stokes_graph(p, s.params.phase);
    j["phase"] = s.params.phase;
    j["legs"] = to_json(legs);
    json saddles = json::array();
    for (const auto& sd : saddle_scan(p, 0.0, 2.0 * std::numbers::pi, s.params.phases)) {
        saddles.push_back({{"alpha", sd.alpha},
                           {"from", complex_to_json(sd.from)},
                           {"to", complex_to_json(sd.to)},
                           {"period", complex_to_json(sd.period)}});
    }
    j["saddles"] = saddles;
    out.write_json("stokes.json", j);
    out.write("stokes.svg", to_svg(p, legs));
    log << legs.size() << " legs, " << saddles.size() << " saddles\n";
}

void cmd_borel_continue(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    const auto sp = basepoint(s);
    const auto& p = s.potential;
    const auto path = geodesic_ray(p, sp, s.params.phase, s.params.tau, s.params.grid);
    const auto g = continue_phi(p, path, s.params.order);
    const auto env = order_envelope(p, path);
    const int viol = envelope_violations(g, env);
    out.write("grid.csv", g.to_csv());
    out.write_json("borel.json", {{"alpha", g.alpha},
                                  {"tau", g.tau},
                                  {"M", g.M()},
                                  {"K", g.K()},
                                  {"bound", {{"C", g.bound.C}, {"K_exp", g.bound.K_exp}}},
                                  {"self_check_error", g.self_check_error},
                                  {"envelope", {{"C", env.C}, {"L", env.L}, {"m", env.m}, {"violations", viol}}}});
    log << "K_exp = " << g.bound.K_exp << ", envelope violations = " << viol << "\n";
}

void cmd_borel_sing(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    const auto sp = basepoint(s);
    const auto& p = s.potential;
    PredictOptions po;
    po.depth = s.params.depth;
    SingularityReport r;
    r.predicted = predict_singularities(p, sp, s.params.radius, po);
    r.detected = detect_pade(borel_germ(p, sp.x, liouville(p, sp), s.params.germ));
    r.matches = match_singularities(r.predicted, r.detected, 2e-2);
    out.write_json("singularities.json", to_json(r));
    for (const auto& m : r.matches) {
        log << "detected " << r.detected[m.detected].location << " ~ predicted " << r.predicted[m.predicted].xi
            << " (distance " << m.distance << ")\n";
    }
}

void cmd_resum(const ProblemSpec& s, Outputs& out, std::ostream& log) {
    const auto sp = basepoint(s);
    const auto& p = s.potential;
    auto path = s.params.path;
    if (path.empty()) path = {sp.x, sp.x + 1.0};
    if (std::abs(path.front() - sp.x) > 1e-12) throw InputError("resum path must start at the basepoint");
    ResumOptions o;
    o.K = s.params.order;
    o.M = s.params.grid;
    o.tau = s.params.tau;
    const auto vals = resum_wkb(p, path, liouville(p, sp), s.params.phase, s.params.hbar, o);
    json arr = json::array();
    std::vector<cplx> back(path.rbegin(), path.rend());
    for (const auto& v : vals) {
        auto j = to_json(v);
        j["derivative"] = complex_to_json(v.derivative);
        // propagate back to the start, where psi = 1
        const auto ode = ode_oracle(p, back, v.hbar, {v.value, v.derivative});
        j["ode_ratio_at_start"] = complex_to_json(1.0 / ode.value);
        arr.push_back(j);
        log << "hbar = " << v.hbar << ": psi = " << v.value << ", |psi/psi_ode - 1| = " << std::abs(1.0 / ode.value - 1.0)
            << "\n";
    }
    out.write_json("resum.json", {{"path", cplx_list(path)}, {"values", arr}});
    out.write("resum.csv", to_csv(vals));
}

void cmd_jump(const ProblemSpec& s, bool hbar_given, Outputs& out, std::ostream& log) {
    const auto sp = basepoint(s);
    std::vector<double> mags;
    if (hbar_given) {
        for (const auto& h : s.params.hbar) mags.push_back(std::abs(h));
    } else {
        for (int i = 0; i < 6; ++i) mags.push_back(0.02 * std::pow(5.0, i / 5.0));
    }
    JumpOptions o;
    o.lateral.K = s.params.order;
    o.lateral.M = s.params.grid;
    const auto rep = jump_fit(s.potential, sp.x, liouville(s.potential, sp), s.params.phase, mags, o);
    out.write_json("jump.json", to_json(rep));
    log << "fitted exponent " << rep.exponent << ", predicted " << rep.predicted << "\n";
}

struct Check {
    std::string name;
    bool pass;
};

void cmd_selftest(Outputs& out, std::ostream& log, bool& all_pass) {
    const Potential one({RationalFn::constant(1.0)});
    const Potential airy({RationalFn({0.0, 1.0}, {1.0})});
    std::vector<Check> checks;
    auto add = [&](const std::string& n, auto&& f) {
        bool ok = false;
        try {
            ok = f();
        } catch (const std::exception&) {
            ok = false;
        }
        checks.push_back({n, ok});
    };
    add("airy_y1_quarter", [&] { return std::abs(wkb_recursion(airy, 1.0, 1.0, 2).y[1] - 0.25) < 1e-12; });
    add("airy_pole_at_infinity_order_5", [&] {
        for (const auto& cp : classify(airy)) {
            if (cp.at_infinity) return cp.order == 5;
        }
        return false;
    });
    add("constant_borel_vanishes", [&] {
        const auto g = continue_phi(one, geodesic_ray(one, 0.0, 1.0, 0.0, 1.0, 64), 8);
        for (const auto& v : g.phi_total) {
            if (std::abs(v) != 0.0) return false;
        }
        return true;
    });
    auto synthetic = [](auto phi) {
        BorelGrid g;
        g.tau = 20.0;
        for (int n = 0; n <= 2000; ++n) g.phi_total.emplace_back(phi(g.tau * n / 2000));
        g.bound = bound_fit(g.phi_total, g.tau);
        return g;
    };
    add("laplace_of_one", [&] { return std::abs(laplace_ray(synthetic([](double) { return 1.0; }), 0.1).value - 0.1) < 1e-12; });
    add("laplace_of_t", [&] {
        return std::abs(laplace_ray(synthetic([](double r) { return r; }), 0.05).value - 0.0025) < 1e-12;
    });
    add("constant_resum_exponential", [&] {
        const auto v = resum_wkb(one, {0.0, 1.0}, 1.0, 0.0, {0.1}, {8, 64, 1.0, 8});
        return std::abs(v[0].value / std::exp(-10.0) - 1.0) < 1e-12;
    });
    add("ode_exponential", [&] {
        const auto o = ode_oracle(one, 0.0, 1.0, 0.5, {1.0, -2.0});
        return std::abs(o.value / std::exp(-2.0) - 1.0) < 1e-9;
    });
    add("motzkin_prefix", [&] {
        const auto m = motzkin_bound(9);
        return m == std::vector<std::uint64_t>{1, 1, 2, 4, 9, 21, 51, 127, 323, 835};
    });
    json j = json::array();
    all_pass = true;
    for (const auto& c : checks) {
        log << (c.pass ? "ok   " : "FAIL ") << c.name << "\n";
        j.push_back({{"name", c.name}, {"pass", c.pass}});
        all_pass &= c.pass;
    }
    out.write_json("selftest.json", j);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot read " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<cplx> parse_hbar_flag(const std::string& s) {
    std::vector<cplx> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) throw InputError("--hbar: cannot parse \"" + item + "\"");
        out.emplace_back(v);
    }
    return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericalError("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

ProblemSpec parse_spec(const std::string& text, const std::string& name) {
    SpecReader r(text, name);
    const json j = r.parse();
    r.only_keys(j, "", {"potential", "basepoint", "params"});
    if (!j.contains("potential")) r.fail("", "missing \"potential\"");

    ProblemSpec s{[&] {
        try {
            return Potential::from_json(j.at("potential"));
        } catch (const InputError& e) {
            r.fail("/potential", e.what());
        }
    }(), std::nullopt, 1, Params{}, false};
    if (j.contains("basepoint")) {
        const auto& b = j.at("basepoint");
        r.only_keys(b, "/basepoint", {"x", "sheet"});
        if (!b.contains("x")) r.fail("/basepoint", "basepoint needs \"x\"");
        s.x = get_complex(r, b.at("x"), "/basepoint/x");
        if (b.contains("sheet")) {
            const int sh = get_int(r, b.at("sheet"), "/basepoint/sheet", -1, 1);
            if (sh == 0) r.fail("/basepoint/sheet", "sheet must be +1 or -1");
            s.sheet = sh;
        }
    }
    if (j.contains("params")) {
        const auto& q = j.at("params");
        r.only_keys(q, "/params",
                    {"order", "grid", "phase", "hbar", "radius", "depth", "tau", "phases", "germ", "path", "seed"});
        auto& P = s.params;
        if (q.contains("order")) P.order = get_int(r, q["order"], "/params/order", 1, 40);
        if (q.contains("grid")) P.grid = get_int(r, q["grid"], "/params/grid", 8, 65536);
        if (q.contains("phase")) P.phase = get_real(r, q["phase"], "/params/phase", -100.0, 100.0);
        if (q.contains("radius")) P.radius = get_real(r, q["radius"], "/params/radius", 1e-12, 1000.0);
        if (q.contains("depth")) P.depth = get_int(r, q["depth"], "/params/depth", 0, 6);
        if (q.contains("tau")) P.tau = get_real(r, q["tau"], "/params/tau", 1e-12, 100.0);
        if (q.contains("phases")) P.phases = get_int(r, q["phases"], "/params/phases", 4, 720);
        if (q.contains("germ")) P.germ = get_int(r, q["germ"], "/params/germ", 12, 60);
        if (q.contains("seed")) P.seed = std::uint64_t(get_int(r, q["seed"], "/params/seed", 0, 2147483647));
        for (const char* key : {"hbar", "path"}) {
            if (!q.contains(key)) continue;
            const std::string ptr = std::string("/params/") + key;
            if (!q[key].is_array() || q[key].empty()) r.fail(ptr, ptr + " must be a non-empty array");
            std::vector<cplx> v;
            for (std::size_t i = 0; i < q[key].size(); ++i) {
                v.push_back(get_complex(r, q[key][i], ptr + "/" + std::to_string(i)));
                if (std::string(key) == "hbar" && (std::abs(v.back()) == 0.0 || std::abs(v.back()) > 1.0))
                    r.fail(ptr + "/" + std::to_string(i), "hbar values must satisfy 0 < |hbar| <= 1");
            }
            (std::string(key) == "hbar" ? P.hbar : P.path) = v;
            s.hbar_given |= std::string(key) == "hbar";
        }
        if (P.grid < 8 * P.order) r.fail("/params/grid", "grid must be at least 8 * order");
    }
    return s;
}

json to_json(const Params& p) {
    return {{"order", p.order}, {"grid", p.grid},     {"phase", p.phase},   {"hbar", cplx_list(p.hbar)},
            {"radius", p.radius}, {"depth", p.depth}, {"tau", p.tau},       {"phases", p.phases},
            {"germ", p.germ},     {"path", cplx_list(p.path)}, {"seed", p.seed}};
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Exact WKB: formal series, Borel continuation, Stokes geometry and resummation", "exwkb"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string out_dir = "out";
    int order = 0, grid = 0, depth = 0;
    double phase = 0.0, radius = 0.0;
    long long seed = 0;
    std::string hbar_list;
    app.add_option("--out", out_dir, "Output directory");
    auto* o_order = app.add_option("--order", order, "Truncation order K");
    auto* o_grid = app.add_option("--grid", grid, "Grid size M");
    auto* o_phase = app.add_option("--phase", phase, "Ray phase alpha");
    auto* o_hbar = app.add_option("--hbar", hbar_list, "Comma-separated hbar values");
    auto* o_radius = app.add_option("--radius", radius, "Prediction radius in |xi|");
    auto* o_depth = app.add_option("--depth", depth, "Saddle-chain depth");
    auto* o_seed = app.add_option("--seed", seed, "Recorded in the manifest");

    std::string spec_path;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"classify", "Critical points of Q_0 dx^2"},
        {"coeffs", "WKB coefficients and Borel germ at the basepoint"},
        {"stokes", "Stokes diagram, Stokes graph (JSON + SVG) and saddles"},
        {"borel-continue", "Borel grid along a geodesic ray"},
        {"borel-sing", "Predicted and Pade-detected Borel singularities"},
        {"resum", "Resummed WKB solution checked against the ODE"},
        {"jump", "Lateral jump exponent at a Stokes ray"},
    };
    for (const auto& [name, help] : commands) {
        app.add_subcommand(name, help)->add_option("spec", spec_path, "Problem spec (JSON)")->required();
    }
    app.add_subcommand("selftest", "Identity checks on trivial cases");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : input_error;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();
    Outputs outputs(out_dir);
    json manifest = {{"tool", "exwkb"}, {"command", cmd}, {"versions", versions()}};
    try {
        if (cmd == "selftest") {
            bool pass = false;
            cmd_selftest(outputs, out, pass);
            manifest["outputs"] = outputs.files();
            outputs.write_json("manifest.json", manifest);
            return pass ? ok : numerical_failure;
        }
        const std::string text = read_file(spec_path);
        auto spec = parse_spec(text, spec_path);
        auto& P = spec.params;
        if (o_order->count()) P.order = order;
        if (o_grid->count()) P.grid = grid;
        if (o_phase->count()) P.phase = phase;
        if (o_hbar->count()) P.hbar = parse_hbar_flag(hbar_list);
        if (o_radius->count()) P.radius = radius;
        if (o_depth->count()) P.depth = depth;
        if (o_seed->count()) {
            if (seed < 0) throw InputError("--seed must be non-negative");
            P.seed = std::uint64_t(seed);
        }
        check_params(P);
        manifest["input"] = {{"file", std::filesystem::path(spec_path).filename().string()},
                             {"sha256", sha256_hex(text)}};
        manifest["parameters"] = to_json(P);

        if (cmd == "classify") cmd_classify(spec, outputs, out);
        else if (cmd == "coeffs") cmd_coeffs(spec, outputs, out);
        else if (cmd == "stokes") cmd_stokes(spec, outputs, out);
        else if (cmd == "borel-continue") cmd_borel_continue(spec, outputs, out);
        else if (cmd == "borel-sing") cmd_borel_sing(spec, outputs, out);
        else if (cmd == "resum") cmd_resum(spec, outputs, out);
        else if (cmd == "jump") cmd_jump(spec, spec.hbar_given || o_hbar->count() > 0, outputs, out);

        manifest["outputs"] = outputs.files();
        outputs.write_json("manifest.json", manifest);
        return ok;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return input_error;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    }
}

}  // namespace exwkb::cli
