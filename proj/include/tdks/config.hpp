#pragma once
/*
 * Run configuration: JSON schema, strict parsing and canonical emission.
 *
 * Every key is optional; missing keys take the defaults below and the
 * emitted form lists all of them. Unknown keys and type mismatches are
 * rejected with the full key path, e.g. "config.potential.exchange_c".
 */

#include "tdks/control.hpp"
#include "tdks/potentials.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace tdks {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PotentialSettings {
  double exchange_c = -std::cbrt(3.0 / std::numbers::pi);
  double exchange_beta = 1.0 / 3.0;
  double correlation_a = 0.44;
  double correlation_b = 7.8;
  double softening = 1.0;
  bool hartree = true;
  bool exchange = true;
  bool correlation = true;
  FieldPreset confinement{"well", 1.0, 1.5, {}, ""};
  FieldPreset control_shape{"dipole", 1.0, 1.0, {}, ""};

  bool operator==(const PotentialSettings&) const = default;
};

struct StatePreset {
  std::string kind = "gaussian";  // gaussian | modes | random | file
  double norm = 1.0;              // L2 norm per particle
  double width = 1.0;
  double momentum = 0.0;
  std::vector<double> centers;  // first-axis centres per particle, default spread evenly
  std::vector<std::vector<int>> modes;  // 1-based multi-index per particle
  double decay = 1.0;
  std::string file;

  bool operator==(const StatePreset&) const = default;
};

struct ControlPreset {
  std::string kind = "sine";  // zero | constant | sine | pulse | file
  double amplitude = 0.5;
  double frequency = 1.0;
  double phase = 0.0;
  std::string file;

  bool operator==(const ControlPreset&) const = default;
};

struct ObjectiveSettings {
  bool tracking = true;
  bool terminal = true;
  double nu = 1e-3;
  std::string target = "reference";  // reference | initial
  ControlPreset reference{"pulse", 1.0, 1.0, 0.0, ""};

  bool operator==(const ObjectiveSettings&) const = default;
};

struct VerifySettings {
  int lipschitz_pairs = 100;
  int random_states = 100;
  int coulomb_resolution = 128;
  double tolerance = 0.05;
  std::vector<double> uniqueness_eps{1e-2, 1e-3, 1e-4};
  std::vector<std::vector<int>> convergence_modes{{4}, {8}, {16}};
  std::vector<double> fd_eps{1e-3, 1e-4, 1e-5, 1e-6};
  int fd_indices = 5;
  double fd_tolerance = 1e-13;  // integrator tolerance for the gradient check

  bool operator==(const VerifySettings&) const = default;
};

struct OptimizeSettings {
  int iterations = 20;
  double initial_step = 1.0;
  double armijo = 1e-4;
  int max_halvings = 30;

  bool operator==(const OptimizeSettings&) const = default;
};

struct OutputSettings {
  std::vector<double> density_times{0.0, 1.0};
  std::string directory = "out";

  bool operator==(const OutputSettings&) const = default;
};

struct RunConfig {
  DomainSpec domain;
  std::vector<int> modes{16};
  PotentialSettings potential;
  IntegratorSettings integrator;
  int alpha = 1;
  StatePreset initial;
  ControlPreset control;
  ObjectiveSettings objective;
  VerifySettings verify;
  OptimizeSettings optimize;
  OutputSettings output;
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Emission.

inline nlohmann::json to_json_value(const FieldPreset& f) {
  return {{"kind", f.kind}, {"strength", f.strength}, {"width", f.width}, {"center", f.center}, {"file", f.file}};
}

inline nlohmann::json to_json_value(const ControlPreset& c) {
  return {{"kind", c.kind}, {"amplitude", c.amplitude}, {"frequency", c.frequency}, {"phase", c.phase}, {"file", c.file}};
}

inline nlohmann::json emit_config(const RunConfig& c) {
  using nlohmann::json;
  const auto& d = c.domain;
  const auto& p = c.potential;
  const auto& s = c.initial;
  const auto& o = c.objective;
  const auto& v = c.verify;
  return json{
      {"domain",
       {{"dimension", d.dimension}, {"lengths", d.lengths}, {"grid", d.grid_points}, {"particles", d.particles},
        {"horizon", d.horizon}, {"steps", d.steps}}},
      {"modes", c.modes},
      {"potential",
       {{"exchange_c", p.exchange_c}, {"exchange_beta", p.exchange_beta}, {"correlation_a", p.correlation_a},
        {"correlation_b", p.correlation_b}, {"softening", p.softening}, {"hartree", p.hartree},
        {"exchange", p.exchange}, {"correlation", p.correlation},
        {"confinement", to_json_value(p.confinement)}, {"control_shape", to_json_value(p.control_shape)}}},
      {"integrator",
       {{"tolerance", c.integrator.tolerance}, {"max_iterations", c.integrator.max_iterations},
        {"blowup", c.integrator.blowup}, {"adjoint_refinement", c.integrator.adjoint_refinement}}},
      {"alpha", c.alpha},
      {"initial",
       {{"kind", s.kind}, {"norm", s.norm}, {"width", s.width}, {"momentum", s.momentum}, {"centers", s.centers},
        {"modes", s.modes}, {"decay", s.decay}, {"file", s.file}}},
      {"control", to_json_value(c.control)},
      {"objective",
       {{"tracking", o.tracking}, {"terminal", o.terminal}, {"nu", o.nu}, {"target", o.target},
        {"reference", to_json_value(o.reference)}}},
      {"verify",
       {{"lipschitz_pairs", v.lipschitz_pairs}, {"random_states", v.random_states},
        {"coulomb_resolution", v.coulomb_resolution}, {"tolerance", v.tolerance},
        {"uniqueness_eps", v.uniqueness_eps}, {"convergence_modes", v.convergence_modes}, {"fd_eps", v.fd_eps},
        {"fd_indices", v.fd_indices}, {"fd_tolerance", v.fd_tolerance}}},
      {"optimize",
       {{"iterations", c.optimize.iterations}, {"initial_step", c.optimize.initial_step},
        {"armijo", c.optimize.armijo}, {"max_halvings", c.optimize.max_halvings}}},
      {"output", {{"density_times", c.output.density_times}, {"directory", c.output.directory}}},
      {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

template <class T>
struct JsonKind;
template <>
struct JsonKind<double> {
  static bool ok(const nlohmann::json& j) { return j.is_number(); }
  static constexpr const char* name = "a number";
};
template <>
struct JsonKind<int> {
  static bool ok(const nlohmann::json& j) { return j.is_number_integer(); }
  static constexpr const char* name = "an integer";
};
template <>
struct JsonKind<std::uint64_t> {
  static bool ok(const nlohmann::json& j) { return j.is_number_unsigned(); }
  static constexpr const char* name = "a non-negative integer";
};
template <>
struct JsonKind<bool> {
  static bool ok(const nlohmann::json& j) { return j.is_boolean(); }
  static constexpr const char* name = "a boolean";
};
template <>
struct JsonKind<std::string> {
  static bool ok(const nlohmann::json& j) { return j.is_string(); }
  static constexpr const char* name = "a string";
};
template <class T>
struct JsonKind<std::vector<T>> {
  static bool ok(const nlohmann::json& j) {
    if (!j.is_array()) return false;
    for (const auto& e : j)
      if (!JsonKind<T>::ok(e)) return false;
    return true;
  }
  static constexpr const char* name = "an array";
};

/// Reads the keys of one JSON object and rejects anything left over.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const auto& v = j_.at(key);
    if (!JsonKind<T>::ok(v)) throw ConfigError(path_ + "." + key + ": expected " + JsonKind<T>::name);
    out = v.get<T>();
  }

  /// Nested object; `read` receives the child section.
  template <class F>
  void object(const std::string& key, F&& read) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Section child(j_.at(key), path_ + "." + key);
    read(child);
    child.finish();
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(path_ + "." + k + ": unknown key");
  }

  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_field(Section& s, FieldPreset& f) {
  s.get("kind", f.kind);
  s.get("strength", f.strength);
  s.get("width", f.width);
  s.get("center", f.center);
  s.get("file", f.file);
}

inline void read_control(Section& s, ControlPreset& c) {
  s.get("kind", c.kind);
  s.get("amplitude", c.amplitude);
  s.get("frequency", c.frequency);
  s.get("phase", c.phase);
  s.get("file", c.file);
}

inline void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path + ": " + what);
}

inline bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

}  // namespace detail

/// Potential configuration on a concrete grid.
inline PotentialConfig build_potential(const SpectralBasis& basis, const PotentialSettings& p) {
  PotentialConfig cfg;
  cfg.dimension = basis.dimension();
  cfg.exchange_c = p.exchange_c;
  cfg.exchange_beta = p.exchange_beta;
  cfg.correlation_a = p.correlation_a;
  cfg.correlation_b = p.correlation_b;
  cfg.softening = p.softening;
  cfg.hartree = p.hartree;
  cfg.exchange = p.exchange;
  cfg.correlation = p.correlation;
  cfg.confinement = make_field(basis, p.confinement);
  cfg.control_shape = make_field(basis, p.control_shape);
  return cfg;
}

/// Checks everything that can be checked without solving.
inline void validate_config(const RunConfig& c) {
  using detail::require;
  try {
    c.domain.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.") + e.what());
  }
  require(static_cast<int>(c.modes.size()) == c.domain.dimension, "config.modes", "one mode count per axis");
  std::shared_ptr<SpectralBasis> basis;
  try {
    basis = std::make_shared<SpectralBasis>(c.domain, c.modes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config.modes: ") + e.what());
  }
  for (const auto* f : {&c.potential.confinement, &c.potential.control_shape}) {
    const std::string path = f == &c.potential.confinement ? "config.potential.confinement" : "config.potential.control_shape";
    require(detail::one_of(f->kind, {"zero", "harmonic", "well", "dipole", "file"}), path + ".kind",
            "unknown field kind '" + f->kind + "'");
    require(f->center.empty() || static_cast<int>(f->center.size()) == c.domain.dimension, path + ".center",
            "one coordinate per axis");
    require(f->width > 0.0, path + ".width", "must be positive");
  }
  try {
    build_potential(*basis, c.potential).validate(*basis);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config.") + e.what());
  }

  const auto& in = c.integrator;
  require(in.tolerance > 0.0, "config.integrator.tolerance", "must be positive");
  require(in.max_iterations >= 1, "config.integrator.max_iterations", "must be >= 1");
  require(in.blowup > 1.0, "config.integrator.blowup", "must exceed 1");
  require(in.adjoint_refinement >= 1, "config.integrator.adjoint_refinement", "must be >= 1");
  require(c.alpha == 0 || c.alpha == 1, "config.alpha", "must be 0 (adjoint) or 1 (forward)");

  const auto& s = c.initial;
  require(detail::one_of(s.kind, {"gaussian", "modes", "random", "file"}), "config.initial.kind",
          "unknown state kind '" + s.kind + "'");
  require(s.norm > 0.0, "config.initial.norm", "must be positive");
  require(s.width > 0.0, "config.initial.width", "must be positive");
  require(s.centers.empty() || static_cast<int>(s.centers.size()) == c.domain.particles, "config.initial.centers",
          "one centre per particle");
  if (s.kind == "modes") {
    require(static_cast<int>(s.modes.size()) == c.domain.particles, "config.initial.modes", "one multi-index per particle");
    for (const auto& idx : s.modes) {
      require(static_cast<int>(idx.size()) == c.domain.dimension, "config.initial.modes", "one index per axis");
      std::array<int, 3> k{0, 0, 0};
      for (std::size_t i = 0; i < idx.size(); ++i) k[i] = idx[i];
      require(basis->find_mode(k) >= 0, "config.initial.modes", "mode outside the basis");
    }
  }
  if (s.kind == "file") require(!s.file.empty(), "config.initial.file", "path required");

  for (const auto* cp : {&c.control, &c.objective.reference}) {
    const std::string path = cp == &c.control ? "config.control" : "config.objective.reference";
    require(detail::one_of(cp->kind, {"zero", "constant", "sine", "pulse", "file"}), path + ".kind",
            "unknown control kind '" + cp->kind + "'");
    if (cp->kind == "file") require(!cp->file.empty(), path + ".file", "path required");
  }
  const auto& o = c.objective;
  require(o.nu > 0.0 && std::isfinite(o.nu), "config.objective.nu", "regularization nu must be positive");
  require(detail::one_of(o.target, {"reference", "initial"}), "config.objective.target",
          "must be 'reference' or 'initial'");

  const auto& v = c.verify;
  require(v.lipschitz_pairs >= 30, "config.verify.lipschitz_pairs", "must be >= 30");
  require(v.random_states >= 1, "config.verify.random_states", "must be >= 1");
  require(v.coulomb_resolution >= 16, "config.verify.coulomb_resolution", "must be >= 16");
  require(v.tolerance >= 0.0, "config.verify.tolerance", "must be >= 0");
  require(!v.uniqueness_eps.empty(), "config.verify.uniqueness_eps", "must not be empty");
  for (double e : v.uniqueness_eps)
    require(e > 100.0 * in.tolerance, "config.verify.uniqueness_eps", "perturbation below the integrator tolerance");
  require(v.convergence_modes.size() >= 3, "config.verify.convergence_modes", "need at least three mode counts");
  for (const auto& m : v.convergence_modes) {
    require(static_cast<int>(m.size()) == c.domain.dimension, "config.verify.convergence_modes", "one count per axis");
    for (std::size_t i = 0; i < m.size(); ++i)
      require(m[i] >= 1 && 2 * m[i] <= c.domain.grid_points[i], "config.verify.convergence_modes",
              "mode count not resolved by the grid");
  }
  require(v.fd_eps.size() >= 2, "config.verify.fd_eps", "need at least two step sizes");
  for (double e : v.fd_eps) require(e > 0.0, "config.verify.fd_eps", "must be positive");
  require(v.fd_indices >= 1 && v.fd_indices <= c.domain.steps + 1, "config.verify.fd_indices", "out of range");
  require(v.fd_tolerance > 0.0, "config.verify.fd_tolerance", "must be positive");

  const auto& op = c.optimize;
  require(op.iterations >= 0, "config.optimize.iterations", "must be >= 0");
  require(op.initial_step > 0.0, "config.optimize.initial_step", "must be positive");
  require(op.armijo > 0.0 && op.armijo < 1.0, "config.optimize.armijo", "must lie in (0,1)");
  require(op.max_halvings >= 0, "config.optimize.max_halvings", "must be >= 0");
  for (double t : c.output.density_times)
    require(t >= 0.0 && t <= c.domain.horizon, "config.output.density_times", "times must lie in [0,T]");
}

inline RunConfig parse_config(const nlohmann::json& j) {
  using detail::Section;
  RunConfig c;
  Section root(j, "config");
  root.object("domain", [&](Section& s) {
    s.get("dimension", c.domain.dimension);
    s.get("lengths", c.domain.lengths);
    s.get("grid", c.domain.grid_points);
    s.get("particles", c.domain.particles);
    s.get("horizon", c.domain.horizon);
    s.get("steps", c.domain.steps);
  });
  // Sizes follow the dimension unless given explicitly.
  if (!j.contains("domain") || !j.at("domain").contains("lengths"))
    c.domain.lengths.assign(std::max(1, std::min(3, c.domain.dimension)), 10.0);
  if (!j.contains("domain") || !j.at("domain").contains("grid"))
    c.domain.grid_points.assign(std::max(1, std::min(3, c.domain.dimension)), 34);
  if (!j.contains("modes")) c.modes.assign(std::max(1, std::min(3, c.domain.dimension)), 16);
  root.get("modes", c.modes);
  root.object("potential", [&](Section& s) {
    auto& p = c.potential;
    s.get("exchange_c", p.exchange_c);
    s.get("exchange_beta", p.exchange_beta);
    s.get("correlation_a", p.correlation_a);
    s.get("correlation_b", p.correlation_b);
    s.get("softening", p.softening);
    s.get("hartree", p.hartree);
    s.get("exchange", p.exchange);
    s.get("correlation", p.correlation);
    s.object("confinement", [&](Section& f) { detail::read_field(f, p.confinement); });
    s.object("control_shape", [&](Section& f) { detail::read_field(f, p.control_shape); });
  });
  root.object("integrator", [&](Section& s) {
    s.get("tolerance", c.integrator.tolerance);
    s.get("max_iterations", c.integrator.max_iterations);
    s.get("blowup", c.integrator.blowup);
    s.get("adjoint_refinement", c.integrator.adjoint_refinement);
  });
  root.get("alpha", c.alpha);
  root.object("initial", [&](Section& s) {
    auto& st = c.initial;
    s.get("kind", st.kind);
    s.get("norm", st.norm);
    s.get("width", st.width);
    s.get("momentum", st.momentum);
    s.get("centers", st.centers);
    s.get("modes", st.modes);
    s.get("decay", st.decay);
    s.get("file", st.file);
  });
  root.object("control", [&](Section& s) { detail::read_control(s, c.control); });
  root.object("objective", [&](Section& s) {
    s.get("tracking", c.objective.tracking);
    s.get("terminal", c.objective.terminal);
    s.get("nu", c.objective.nu);
    s.get("target", c.objective.target);
    s.object("reference", [&](Section& r) { detail::read_control(r, c.objective.reference); });
  });
  root.object("verify", [&](Section& s) {
    auto& v = c.verify;
    s.get("lipschitz_pairs", v.lipschitz_pairs);
    s.get("random_states", v.random_states);
    s.get("coulomb_resolution", v.coulomb_resolution);
    s.get("tolerance", v.tolerance);
    s.get("uniqueness_eps", v.uniqueness_eps);
    s.get("convergence_modes", v.convergence_modes);
    s.get("fd_eps", v.fd_eps);
    s.get("fd_indices", v.fd_indices);
    s.get("fd_tolerance", v.fd_tolerance);
  });
  root.object("optimize", [&](Section& s) {
    s.get("iterations", c.optimize.iterations);
    s.get("initial_step", c.optimize.initial_step);
    s.get("armijo", c.optimize.armijo);
    s.get("max_halvings", c.optimize.max_halvings);
  });
  root.object("output", [&](Section& s) {
    s.get("density_times", c.output.density_times);
    s.get("directory", c.output.directory);
  });
  root.get("seed", c.seed);
  root.finish();
  if (!j.contains("verify") || !j.at("verify").contains("convergence_modes"))
    for (int level = 0; level < 3; ++level) {
      auto& m = c.verify.convergence_modes[level];
      m.resize(c.modes.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(1, c.modes[i] >> (2 - level));
    }
  if (!j.contains("output") || !j.at("output").contains("density_times"))
    c.output.density_times = {0.0, c.domain.horizon};
  validate_config(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

}  // namespace tdks
