#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>

#include <fmt/format.h>

namespace wfrho::cli {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw InvalidInput(fmt::format("{}: {}", path, what));
}

// Walks one JSON object, remembering which keys were read so the rest can be rejected.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void get(const std::string& key, double& out) {
        if (const json* v = find(key)) {
            if (!v->is_number()) fail(at(key), "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(at(key), "must be finite");
        }
    }
    void get(const std::string& key, int& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_integer()) fail(at(key), "expected an integer");
            out = v->get<int>();
        }
    }
    void get(const std::string& key, std::uint64_t& out) {
        if (const json* v = find(key)) {
            if (!v->is_number_unsigned()) fail(at(key), "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void get(const std::string& key, std::string& out) {
        if (const json* v = find(key)) {
            if (!v->is_string()) fail(at(key), "expected a string");
            out = v->get<std::string>();
        }
    }
    void get(const std::string& key, Vec3& out) {
        if (const json* v = find(key)) out = vec3_of(*v, at(key));
    }
    void get(const std::string& key, std::vector<double>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(at(key), "expected an array of numbers");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number()) fail(fmt::format("{}[{}]", at(key), i), "expected a number");
                out.push_back((*v)[i].get<double>());
            }
        }
    }
    void get(const std::string& key, std::vector<Vec3>& out) {
        if (const json* v = find(key)) {
            if (!v->is_array()) fail(at(key), "expected an array of 3-vectors");
            out.clear();
            for (std::size_t i = 0; i < v->size(); ++i) out.push_back(vec3_of((*v)[i], fmt::format("{}[{}]", at(key), i)));
        }
    }
    void object(const std::string& key, const std::function<void(Reader&)>& body) {
        if (const json* v = find(key)) {
            Reader sub(*v, at(key));
            body(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(at(it.key()), "unknown key");
    }

    static Vec3 vec3_of(const json& v, const std::string& path) {
        if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
        Vec3 out;
        for (int k = 0; k < 3; ++k) {
            if (!v[k].is_number()) fail(path, "expected an array of 3 numbers");
            out[k] = v[k].get<double>();
        }
        return out;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

const char* mode_name(AsymptoteMode m) { return m == AsymptoteMode::rest ? "rest" : "uniform"; }

void read_charge(Reader& r, ChargeEntry& c) {
    r.get("mass", c.mass);
    r.get("e", c.e);
    r.get("R", c.R);
    r.object("profile", [&](Reader& p) { p.get("sharpness", c.sharpness); });
    r.get("q0", c.q0);
    r.get("p0", c.p0);
    r.object("past", [&](Reader& p) {
        std::string mode = mode_name(c.past.mode);
        p.get("mode", mode);
        if (mode == "rest") c.past.mode = AsymptoteMode::rest;
        else if (mode == "uniform") c.past.mode = AsymptoteMode::uniform;
        else fail(p.at("mode"), "expected \"rest\" or \"uniform\"");
        p.get("velocity", c.past.velocity);
        p.get("offset", c.past.offset);
        p.get("transition", c.past.transition);
    });
}

}  // namespace

std::vector<ChargeSpec> Scenario::charge_specs() const {
    std::vector<ChargeSpec> out;
    for (const auto& c : charges) out.push_back({c.mass, make_bump_density(c.R, c.e, BumpProfile{c.sharpness})});
    return out;
}

FieldQuad Scenario::field_quad() const {
    FieldQuad q;
    const auto& b = quadrature;
    q.n_time = b.time_order;
    q.n_shell = b.shell_order;
    q.smeared_radial = b.radial_order;
    q.smeared_theta = b.sphere_order;
    q.smeared_phi = 2 * b.sphere_order;
    q.greens = GreensOptions(b.sphere_order, 2 * b.sphere_order, b.radial_order, b.radial_order, b.stencil_h);
    return q;
}

MlsiConfig Scenario::mlsi_config() const {
    MlsiConfig c;
    c.dt = run.dt;
    c.v_guard = run.v_guard;
    c.constraint_every = run.constraint_every;
    c.force_radial = quadrature.force_radial;
    c.force_theta = quadrature.force_theta;
    c.force_phi = quadrature.force_phi;
    c.quad = field_quad();
    return c;
}

WfConfig Scenario::wf_config() const {
    WfConfig c;
    c.T = run.T;
    c.boundary = fixedpoint.boundary == "coulomb" ? BoundaryKind::coulomb : BoundaryKind::uniform_lw;
    c.e_plus = fixedpoint.e_plus;
    c.e_minus = fixedpoint.e_minus;
    c.mlsi = mlsi_config();
    c.max_iter = fixedpoint.max_iter;
    c.tol = fixedpoint.tol;
    c.damping = fixedpoint.damping;
    c.grid_spacing = normgrid.spacing;
    c.grid_radius = normgrid.radius;
    return c;
}

Scenario default_scenario() {
    Scenario s;
    ChargeEntry a;
    a.q0 = {-0.5, 0, 0};
    a.p0 = {0, 0.1, 0};
    ChargeEntry b = a;
    b.q0 = {0.5, 0, 0};
    b.p0 = {0, -0.1, 0};
    s.charges = {a, b};
    return s;
}

void validate(const Scenario& s) {
    if (s.charges.empty()) fail("scenario.charges", "at least one charge is required");
    for (std::size_t i = 0; i < s.charges.size(); ++i) {
        const auto& c = s.charges[i];
        const std::string at = fmt::format("scenario.charges[{}]", i);
        if (c.mass == 0.0) fail(at + ".mass", "mass must be nonzero");
        if (!(c.R > 0.0)) fail(at + ".R", "support radius must be positive");
        if (!(c.sharpness > 0.0)) fail(at + ".profile.sharpness", "must be positive");
        if (!(norm(v_of_p(c.p0, c.mass)) < 1.0)) fail(at + ".p0", "initial speed must be below the speed of light");
        if (!(norm(c.past.velocity) < 1.0)) fail(at + ".past.velocity", "speed must be below the speed of light");
        if (c.past.transition < 0.0) fail(at + ".past.transition", "must be non-negative");
        for (std::size_t j = 0; j < i; ++j)
            if (norm(c.q0 - s.charges[j].q0) <= c.R + s.charges[j].R)
                fail(at + ".q0", fmt::format("support overlaps charge {} at the initial time", j));
    }
    const auto& r = s.run;
    if (std::find(kModes.begin(), kModes.end(), r.mode) == kModes.end()) fail("scenario.run.mode", "unknown mode");
    if (!(r.T >= 0.0)) fail("scenario.run.T", "must be non-negative");
    if (!(r.dt > 0.0)) fail("scenario.run.dt", "must be positive");
    if (!(r.t_end > r.t0)) fail("scenario.run.t_end", "must exceed t0");
    if (!(r.v_guard > 0.0 && r.v_guard < 1.0)) fail("scenario.run.v_guard", "must lie in (0, 1)");
    if (r.constraint_every < 0) fail("scenario.run.constraint_every", "must be non-negative");
    const auto& q = s.quadrature;
    for (auto [name, v] : {std::pair{"time_order", q.time_order}, {"shell_order", q.shell_order},
                           {"radial_order", q.radial_order}, {"sphere_order", q.sphere_order},
                           {"force_radial", q.force_radial}, {"force_theta", q.force_theta},
                           {"force_phi", q.force_phi}})
        if (v < 1) fail(std::string("scenario.quadrature.") + name, "must be at least 1");
    if (!(q.stencil_h > 0.0)) fail("scenario.quadrature.stencil_h", "must be positive");
    const auto& f = s.fixedpoint;
    if (f.max_iter < 0) fail("scenario.fixedpoint.max_iter", "must be non-negative");
    if (!(f.tol > 0.0)) fail("scenario.fixedpoint.tol", "must be positive");
    if (!(f.damping > 0.0 && f.damping <= 1.0)) fail("scenario.fixedpoint.damping", "must lie in (0, 1]");
    if (f.e_plus < 0.0 || f.e_minus < 0.0 || std::abs(f.e_plus + f.e_minus - 1.0) > 1e-12)
        fail("scenario.fixedpoint", "e_plus and e_minus must be non-negative and sum to one");
    if (f.boundary != "coulomb" && f.boundary != "uniform_lw")
        fail("scenario.fixedpoint.boundary", "expected \"coulomb\" or \"uniform_lw\"");
    if (s.normgrid.radius < 0.0) fail("scenario.normgrid.radius", "must be non-negative");
    if (!(s.normgrid.spacing > 0.0)) fail("scenario.normgrid.spacing", "must be positive");
    const auto& p = s.output.probes;
    if (p.count < 0) fail("scenario.output.probes.count", "must be non-negative");
    if (!(p.radius > 0.0)) fail("scenario.output.probes.radius", "must be positive");
    for (auto [name, v] : {std::pair{"trajectory", &s.output.trajectory}, {"fields", &s.output.fields},
                           {"residual_log", &s.output.residual_log}, {"summary", &s.output.summary}})
        if (v->empty()) fail(std::string("scenario.output.") + name, "must be a file name");
}

Scenario parse_scenario(const json& doc) {
    Scenario s;
    Reader root(doc, "scenario");
    const json* charges = root.find("charges");
    if (!charges) fail("scenario.charges", "missing");
    if (!charges->is_array()) fail("scenario.charges", "expected an array");
    for (std::size_t i = 0; i < charges->size(); ++i) {
        Reader r((*charges)[i], fmt::format("scenario.charges[{}]", i));
        ChargeEntry c;
        read_charge(r, c);
        r.finish();
        s.charges.push_back(c);
    }
    root.object("run", [&](Reader& r) {
        r.get("mode", s.run.mode);
        r.get("T", s.run.T);
        r.get("t0", s.run.t0);
        r.get("t_end", s.run.t_end);
        r.get("dt", s.run.dt);
        r.get("v_guard", s.run.v_guard);
        r.get("constraint_every", s.run.constraint_every);
    });
    root.object("quadrature", [&](Reader& r) {
        auto& q = s.quadrature;
        r.get("time_order", q.time_order);
        r.get("shell_order", q.shell_order);
        r.get("radial_order", q.radial_order);
        r.get("sphere_order", q.sphere_order);
        r.get("force_radial", q.force_radial);
        r.get("force_theta", q.force_theta);
        r.get("force_phi", q.force_phi);
        r.get("stencil_h", q.stencil_h);
    });
    root.object("fixedpoint", [&](Reader& r) {
        auto& f = s.fixedpoint;
        r.get("max_iter", f.max_iter);
        r.get("tol", f.tol);
        r.get("damping", f.damping);
        r.get("e_plus", f.e_plus);
        r.get("e_minus", f.e_minus);
        r.get("boundary", f.boundary);
    });
    root.object("normgrid", [&](Reader& r) {
        r.get("radius", s.normgrid.radius);
        r.get("spacing", s.normgrid.spacing);
    });
    root.object("output", [&](Reader& r) {
        auto& o = s.output;
        r.get("trajectory", o.trajectory);
        r.get("fields", o.fields);
        r.get("residual_log", o.residual_log);
        r.get("summary", o.summary);
        r.object("probes", [&](Reader& p) {
            p.get("count", o.probes.count);
            p.get("radius", o.probes.radius);
            p.get("times", o.probes.times);
            p.get("points", o.probes.points);
        });
    });
    root.get("seed", s.seed);
    root.finish();
    validate(s);
    return s;
}

Scenario parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput(fmt::format("cannot open scenario file '{}'", path));
    json doc;
    try {
        doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw InvalidInput(fmt::format("{}: malformed JSON: {}", path, e.what()));
    }
    return parse_scenario(doc);
}

json emit_scenario(const Scenario& s) {
    json charges = json::array();
    for (const auto& c : s.charges)
        charges.push_back({{"mass", c.mass},
                           {"e", c.e},
                           {"R", c.R},
                           {"profile", {{"sharpness", c.sharpness}}},
                           {"q0", vec_json(c.q0)},
                           {"p0", vec_json(c.p0)},
                           {"past",
                            {{"mode", mode_name(c.past.mode)},
                             {"velocity", vec_json(c.past.velocity)},
                             {"offset", vec_json(c.past.offset)},
                             {"transition", c.past.transition}}}});
    json points = json::array();
    for (const auto& x : s.output.probes.points) points.push_back(vec_json(x));
    const auto& q = s.quadrature;
    const auto& f = s.fixedpoint;
    return {{"charges", charges},
            {"run",
             {{"mode", s.run.mode},
              {"T", s.run.T},
              {"t0", s.run.t0},
              {"t_end", s.run.t_end},
              {"dt", s.run.dt},
              {"v_guard", s.run.v_guard},
              {"constraint_every", s.run.constraint_every}}},
            {"quadrature",
             {{"time_order", q.time_order},
              {"shell_order", q.shell_order},
              {"radial_order", q.radial_order},
              {"sphere_order", q.sphere_order},
              {"force_radial", q.force_radial},
              {"force_theta", q.force_theta},
              {"force_phi", q.force_phi},
              {"stencil_h", q.stencil_h}}},
            {"fixedpoint",
             {{"max_iter", f.max_iter},
              {"tol", f.tol},
              {"damping", f.damping},
              {"e_plus", f.e_plus},
              {"e_minus", f.e_minus},
              {"boundary", f.boundary}}},
            {"normgrid", {{"radius", s.normgrid.radius}, {"spacing", s.normgrid.spacing}}},
            {"output",
             {{"trajectory", s.output.trajectory},
              {"fields", s.output.fields},
              {"residual_log", s.output.residual_log},
              {"summary", s.output.summary},
              {"probes",
               {{"count", s.output.probes.count},
                {"radius", s.output.probes.radius},
                {"times", s.output.probes.times},
                {"points", points}}}}},
            {"seed", s.seed}};
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) fail("--override", fmt::format("expected key=value, got '{}'", assignment));
    const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::string path = "scenario";
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string seg = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (seg.empty()) fail("--override", fmt::format("empty path segment in '{}'", key));
        json* next = nullptr;
        if (node->is_array()) {
            const bool digits = std::all_of(seg.begin(), seg.end(), [](char c) { return c >= '0' && c <= '9'; });
            if (!digits) fail(path, fmt::format("expected an array index, got '{}'", seg));
            const std::size_t idx = std::stoul(seg);
            if (idx >= node->size()) fail(fmt::format("{}[{}]", path, idx), "index out of range");
            next = &(*node)[idx];
            path += fmt::format("[{}]", idx);
        } else {
            if (node->is_null()) *node = json::object();
            if (!node->is_object()) fail(path, "cannot descend into a scalar");
            next = &(*node)[seg];
            path += "." + seg;
        }
        node = next;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = value;
}

}  // namespace wfrho::cli
