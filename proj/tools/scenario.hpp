#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wfrho/synge.hpp"
#include "wfrho/wf.hpp"

namespace wfrho::cli {

struct ChargeEntry {
    double mass = 1.0;
    double e = 1.0;
    double R = 0.1;
    double sharpness = 1.0;  // bump profile parameter
    Vec3 q0, p0;
    PastSpec past;  // synge mode only

    bool operator==(const ChargeEntry&) const = default;
};

struct RunBlock {
    std::string mode = "verify";
    double T = 0.5;
    double t0 = 0.0;
    double t_end = 1.0;
    double dt = 0.02;
    double v_guard = 0.99;
    int constraint_every = 10;

    bool operator==(const RunBlock&) const = default;
};

struct QuadratureBlock {
    int time_order = 32;    // Gauss-Legendre nodes per source window
    int shell_order = 12;
    int radial_order = 16;  // smeared and ball rules
    int sphere_order = 16;  // polar nodes; twice as many azimuthal nodes
    int force_radial = 3, force_theta = 3, force_phi = 6;
    double stencil_h = 1e-4;  // generic Kirchhoff path

    bool operator==(const QuadratureBlock&) const = default;
};

struct FixedPointBlock {
    int max_iter = 30;
    double tol = 1e-6;
    double damping = 1.0;
    double e_plus = 0.5, e_minus = 0.5;
    std::string boundary = "coulomb";  // or "uniform_lw"

    bool operator==(const FixedPointBlock&) const = default;
};

struct NormGridBlock {
    double radius = 0.0;  // 0 picks the automatic ball
    double spacing = 0.2;

    bool operator==(const NormGridBlock&) const = default;
};

struct ProbeBlock {
    int count = 8;          // random points in the ball below
    double radius = 1.0;    // around the centroid of the initial positions
    std::vector<double> times;  // empty: mode default
    std::vector<Vec3> points;   // always probed in addition

    bool operator==(const ProbeBlock&) const = default;
};

struct OutputBlock {
    std::string trajectory = "trajectory.csv";
    std::string fields = "fields.csv";
    std::string residual_log = "residuals.jsonl";
    std::string summary = "summary.json";
    ProbeBlock probes;

    bool operator==(const OutputBlock&) const = default;
};

struct Scenario {
    std::vector<ChargeEntry> charges;
    RunBlock run;
    QuadratureBlock quadrature;
    FixedPointBlock fixedpoint;
    NormGridBlock normgrid;
    OutputBlock output;
    std::uint64_t seed = 1;

    bool operator==(const Scenario&) const = default;

    std::vector<ChargeSpec> charge_specs() const;
    FieldQuad field_quad() const;
    MlsiConfig mlsi_config() const;
    WfConfig wf_config() const;
};

inline const std::vector<std::string> kModes{"synge", "wf-fixed-point", "maxwell-probe", "verify"};

// Two charges at rest-ish, used when `verify` runs without a scenario file.
Scenario default_scenario();

// Strict parsing: unknown keys and type errors raise InvalidInput naming the field path.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario parse_scenario_file(const std::string& path);
nlohmann::json emit_scenario(const Scenario& s);

// "run.T=2", "charges.1.mass=3", "output.probes.times=[0,1]". Values are read as JSON, falling back to a string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

// Physical checks (R > 0, m != 0, |v(p0)| < 1, ...), also run by parse_scenario.
void validate(const Scenario& s);

}  // namespace wfrho::cli
