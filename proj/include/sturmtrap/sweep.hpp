// Run configuration, figure presets and the parallel sweep driver.
//
// A RunConfig is a JSON document (schema in README.md).  Automatic values are
// written as null.  run_sweep() evaluates every (curve, x, method) point on a
// worker pool, merges in config order and writes one CSV per curve plus
// manifest.json.
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "sturmtrap/csv.hpp"
#include "sturmtrap/reflection_solver.hpp"
#include "sturmtrap/tdse_oracle.hpp"
#include "sturmtrap/threshold_analytics.hpp"
#include "sturmtrap/trap_model.hpp"

namespace sturmtrap {

inline constexpr const char* library_version = "1.0.0";

struct Method {
  enum class Kind { ReflectionSingle, ReflectionSingleM2, ReflectionCoupled, Tdse, Analytic };
  Kind kind = Kind::ReflectionSingle;
  int coupled = 2;  // channel count for ReflectionCoupled

  std::string name() const {
    switch (kind) {
      case Kind::ReflectionSingle: return "reflection-single";
      case Kind::ReflectionSingleM2: return "reflection-single+M2";
      case Kind::ReflectionCoupled: return "reflection-coupled(" + std::to_string(coupled) + ")";
      case Kind::Tdse: return "tdse";
      case Kind::Analytic: return "analytic";
    }
    return "?";
  }

  // Column name in the curve CSV.
  std::string column() const {
    switch (kind) {
      case Kind::ReflectionSingle: return "reflection_single";
      case Kind::ReflectionSingleM2: return "reflection_single_m2";
      case Kind::ReflectionCoupled: return "reflection_coupled_" + std::to_string(coupled);
      case Kind::Tdse: return "tdse";
      case Kind::Analytic: return "analytic";
    }
    return "?";
  }

  static Method parse(const std::string& s, const std::string& path) {
    if (s == "reflection-single") return {Kind::ReflectionSingle};
    if (s == "reflection-single+M2") return {Kind::ReflectionSingleM2};
    if (s == "tdse") return {Kind::Tdse};
    if (s == "analytic") return {Kind::Analytic};
    const std::string pre = "reflection-coupled(";
    if (s.rfind(pre, 0) == 0 && s.back() == ')') {
      const std::string k = s.substr(pre.size(), s.size() - pre.size() - 1);
      std::size_t used = 0;
      int n = 0;
      try {
        n = std::stoi(k, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != k.size() || n < 1) throw ConfigError(path, "bad channel count in '" + s + "'");
      return {Kind::ReflectionCoupled, n};
    }
    throw ConfigError(path, "unknown method '" + s + "'");
  }

  bool operator==(const Method&) const = default;
};

enum class XAxis { Gamma, Rate, Energy };

inline const char* to_string(XAxis x) {
  switch (x) {
    case XAxis::Gamma: return "gamma";
    case XAxis::Rate: return "rate";
    case XAxis::Energy: return "energy";
  }
  return "?";
}

// Axes of the sweep.  Points are the cartesian product shapes × energy × rate
// × channels (or gamma × channels for a zero-range gamma sweep); the x axis
// runs along rows and every other combination is a separate curve.
struct SweepAxes {
  XAxis x = XAxis::Rate;
  std::vector<double> gamma;   // zero-range only: ℰ = γ at v = 1, μ = 1
  std::vector<double> energy;  // ℰ
  std::vector<double> rate;    // v
  std::vector<int> channels{0};
  std::vector<Shape> shapes;   // empty: trap.shape
  bool energy_from_entry = false;  // ℰ is measured from the entry strength of channel m

  bool operator==(const SweepAxes&) const = default;
};

struct RunConfig {
  std::string experiment = "custom";
  int version = 1;
  TrapSpec trap = TrapSpec::rectangular(0.5, 0.0, 1.0);
  std::vector<Method> methods{Method{}};
  SweepAxes axes;
  ReflectionOptions reflection;
  TdseOptions tdse;
  bool traces = false;  // write a population trace per tdse point
  std::string output = "out";
  int threads = 0;      // 0: hardware concurrency

  static RunConfig preset(const std::string& name);
};

namespace detail {

using json = nlohmann::ordered_json;

// NaN marks an automatic value and is written as null.
inline json num(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

inline bool same_number(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  double number(const std::string& key, double fallback, bool nullable = false) {
    seen_.push_back(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (v.is_null() && nullable) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw ConfigError(at(key), nullable ? "expected a number or null" : "expected a number");
    return v.get<double>();
  }
  int integer(const std::string& key, int fallback) {
    seen_.push_back(key);
    if (!j_.contains(key)) return fallback;
    const auto& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key), "expected an integer");
    return v.get<int>();
  }
  bool boolean(const std::string& key, bool fallback) {
    seen_.push_back(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_boolean()) throw ConfigError(at(key), "expected true or false");
    return j_.at(key).get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    seen_.push_back(key);
    if (!j_.contains(key)) return fallback;
    if (!j_.at(key).is_string()) throw ConfigError(at(key), "expected a string");
    return j_.at(key).get<std::string>();
  }
  std::vector<double> numbers(const std::string& key) {
    seen_.push_back(key);
    std::vector<double> out;
    if (!j_.contains(key)) return out;
    const auto& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key), "expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw ConfigError(at(key) + "[" + std::to_string(i) + "]", "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }
  const json& array(const std::string& key) {
    seen_.push_back(key);
    if (!j_.at(key).is_array()) throw ConfigError(at(key), "expected an array");
    return j_.at(key);
  }
  Reader child(const std::string& key) {
    seen_.push_back(key);
    return Reader(j_.at(key), at(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError(at(it.key()), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> seen_;
};

}  // namespace detail

inline nlohmann::ordered_json to_json(const ReflectionOptions& o) {
  using detail::num;
  return {{"rtol", o.rtol},
          {"decay_target", o.decay_target},
          {"wkb_tolerance", o.wkb_tolerance},
          {"fit_wavelengths", o.fit_wavelengths},
          {"fit_min_samples", o.fit_min_samples},
          {"window_shift", o.window_shift},
          {"stability_tol", o.stability_tol},
          {"arc_radius", o.arc_radius},
          {"omega_min", num(o.omega_min)},
          {"omega_max", num(o.omega_max)},
          {"flux_tol", o.flux_tol}};
}

inline nlohmann::ordered_json to_json(const TdseOptions& o) {
  using detail::num;
  return {{"dx", num(o.dx)},
          {"inner_length", num(o.inner_length)},
          {"absorber_width", num(o.absorber_width)},
          {"absorber_strength", num(o.absorber_strength)},
          {"du", num(o.du)},
          {"time_stretch", num(o.time_stretch)},
          {"t_min", num(o.t_min)},
          {"samples", o.samples},
          {"max_states", o.max_states},
          {"absorber", o.absorber},
          {"self_check", o.self_check},
          {"self_check_tol", o.self_check_tol},
          {"dx_factor", o.dx_factor},
          {"dt_factor", o.dt_factor},
          {"start_phase", o.start_phase},
          {"absorber_wavelengths", o.absorber_wavelengths},
          {"start_factor", o.start_factor}};
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  using json = nlohmann::ordered_json;
  json methods = json::array();
  for (const auto& m : c.methods) methods.push_back(m.name());
  json shapes = json::array();
  for (auto s : c.axes.shapes) shapes.push_back(to_string(s));
  return {{"experiment", c.experiment},
          {"version", c.version},
          {"trap",
           {{"shape", to_string(c.trap.shape)},
            {"half_width", c.trap.half_width},
            {"mass", c.trap.mass},
            {"threshold_offset", c.trap.threshold_offset},
            {"rate", c.trap.rate}}},
          {"methods", methods},
          {"axes",
           {{"x", to_string(c.axes.x)},
            {"gamma", c.axes.gamma},
            {"energy", c.axes.energy},
            {"rate", c.axes.rate},
            {"channels", c.axes.channels},
            {"shapes", shapes},
            {"energy_from_entry", c.axes.energy_from_entry}}},
          {"reflection", to_json(c.reflection)},
          {"tdse", to_json(c.tdse)},
          {"traces", c.traces},
          {"output", c.output},
          {"threads", c.threads}};
}

inline std::string dump_config(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

inline void validate(const RunConfig& c) {
  const auto& a = c.axes;
  if (c.methods.empty()) throw ConfigError("methods", "at least one method is required");
  if (c.threads < 0) throw ConfigError("threads", "must be ≥ 0");
  if (c.output.empty()) throw ConfigError("output", "must not be empty");
  if (!(c.trap.mass > 0.0)) throw ConfigError("trap.mass", "must be > 0");
  if (!(c.trap.rate > 0.0)) throw ConfigError("trap.rate", "must be > 0");
  if (c.trap.shape != Shape::ZeroRange && !(c.trap.half_width > 0.0))
    throw ConfigError("trap.half_width", "must be > 0");
  for (std::size_t i = 0; i < a.rate.size(); ++i)
    if (!(a.rate[i] > 0.0) || !std::isfinite(a.rate[i]))
      throw ConfigError("axes.rate[" + std::to_string(i) + "]", "must be finite and > 0");
  for (std::size_t i = 0; i < a.energy.size(); ++i)
    if (!std::isfinite(a.energy[i])) throw ConfigError("axes.energy[" + std::to_string(i) + "]", "must be finite");
  for (std::size_t i = 0; i < a.gamma.size(); ++i)
    if (!std::isfinite(a.gamma[i])) throw ConfigError("axes.gamma[" + std::to_string(i) + "]", "must be finite");
  if (a.channels.empty()) throw ConfigError("axes.channels", "at least one channel is required");
  for (std::size_t i = 0; i < a.channels.size(); ++i)
    if (a.channels[i] < 0 || a.channels[i] % 2 != 0)
      throw ConfigError("axes.channels[" + std::to_string(i) + "]", "must be a non-negative even channel");
  std::vector<Shape> shapes = a.shapes.empty() ? std::vector<Shape>{c.trap.shape} : a.shapes;
  const bool zero_range = std::find(shapes.begin(), shapes.end(), Shape::ZeroRange) != shapes.end();
  if (a.x == XAxis::Gamma) {
    if (a.gamma.empty()) throw ConfigError("axes.gamma", "required when axes.x is gamma");
    if (shapes != std::vector<Shape>{Shape::ZeroRange})
      throw ConfigError("axes.gamma", "a gamma sweep needs a zero-range trap");
  } else {
    if (!a.gamma.empty()) throw ConfigError("axes.gamma", "only used when axes.x is gamma");
    if (a.x == XAxis::Rate && a.rate.empty()) throw ConfigError("axes.rate", "required when axes.x is rate");
    if (a.x == XAxis::Energy && a.energy.empty()) throw ConfigError("axes.energy", "required when axes.x is energy");
  }
  if (zero_range && (a.channels != std::vector<int>{0}))
    throw ConfigError("axes.channels", "a zero-range trap has only channel 0");
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    const auto& m = c.methods[i];
    const std::string p = "methods[" + std::to_string(i) + "]";
    if (m.kind == Method::Kind::ReflectionCoupled) {
      if (shapes != std::vector<Shape>{Shape::Rectangular})
        throw ConfigError(p, "coupled channels need a rectangular trap");
      for (int ch : a.channels)
        if (ch / 2 >= m.coupled) throw ConfigError(p, "channel " + std::to_string(ch) + " is outside the coupled set");
    }
    if (m.kind == Method::Kind::ReflectionSingleM2 && zero_range)
      throw ConfigError(p, "a zero-range trap has no M2 correction");
  }
  const auto& r = c.reflection;
  if (!(r.rtol > 0.0)) throw ConfigError("reflection.rtol", "must be > 0");
  if (!(r.decay_target > 0.0)) throw ConfigError("reflection.decay_target", "must be > 0");
  if (!(r.wkb_tolerance > 0.0)) throw ConfigError("reflection.wkb_tolerance", "must be > 0");
  if (!(r.fit_wavelengths > 0.0)) throw ConfigError("reflection.fit_wavelengths", "must be > 0");
  if (r.fit_min_samples < 4) throw ConfigError("reflection.fit_min_samples", "must be ≥ 4");
  if (!(r.stability_tol > 0.0)) throw ConfigError("reflection.stability_tol", "must be > 0");
  if (r.arc_radius < 0.0) throw ConfigError("reflection.arc_radius", "must be ≥ 0");
  const auto& t = c.tdse;
  if (t.samples < 2) throw ConfigError("tdse.samples", "must be ≥ 2");
  if (t.max_states < 1) throw ConfigError("tdse.max_states", "must be ≥ 1");
  if (!(t.dx_factor > 0.0)) throw ConfigError("tdse.dx_factor", "must be > 0");
  if (!(t.dt_factor > 0.0)) throw ConfigError("tdse.dt_factor", "must be > 0");
  if (!(t.self_check_tol > 0.0)) throw ConfigError("tdse.self_check_tol", "must be > 0");
  for (auto [v, name] : {std::pair{t.dx, "dx"}, {t.du, "du"}, {t.inner_length, "inner_length"},
                         {t.absorber_width, "absorber_width"}})
    if (!std::isnan(v) && !(v > 0.0)) throw ConfigError(std::string("tdse.") + name, "must be > 0 or null");
}

inline RunConfig config_from_json(const nlohmann::ordered_json& j) {
  using detail::Reader;
  RunConfig c;
  Reader r(j, "");
  c.experiment = r.string("experiment", c.experiment);
  c.version = r.integer("version", c.version);
  if (r.has("trap")) {
    auto t = r.child("trap");
    const std::string shape = t.string("shape", to_string(c.trap.shape));
    try {
      c.trap.shape = shape_from_string(shape);
    } catch (const Error&) {
      throw ConfigError(t.at("shape"), "unknown shape '" + shape + "'");
    }
    c.trap.half_width = t.number("half_width", c.trap.half_width);
    c.trap.mass = t.number("mass", c.trap.mass);
    c.trap.threshold_offset = t.number("threshold_offset", c.trap.threshold_offset);
    c.trap.rate = t.number("rate", c.trap.rate);
    t.finish();
  }
  if (r.has("methods")) {
    const auto& m = r.array("methods");
    c.methods.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string p = "methods[" + std::to_string(i) + "]";
      if (!m[i].is_string()) throw ConfigError(p, "expected a string");
      c.methods.push_back(Method::parse(m[i].get<std::string>(), p));
    }
  }
  if (r.has("axes")) {
    auto a = r.child("axes");
    const std::string x = a.string("x", to_string(c.axes.x));
    if (x == "gamma") c.axes.x = XAxis::Gamma;
    else if (x == "rate") c.axes.x = XAxis::Rate;
    else if (x == "energy") c.axes.x = XAxis::Energy;
    else throw ConfigError(a.at("x"), "expected gamma, rate or energy");
    c.axes.gamma = a.numbers("gamma");
    c.axes.energy = a.numbers("energy");
    c.axes.rate = a.numbers("rate");
    if (a.has("channels")) {
      const auto& ch = a.array("channels");
      c.axes.channels.clear();
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (!ch[i].is_number_integer()) throw ConfigError(a.at("channels") + "[" + std::to_string(i) + "]", "expected an integer");
        c.axes.channels.push_back(ch[i].get<int>());
      }
    }
    if (a.has("shapes")) {
      const auto& sh = a.array("shapes");
      for (std::size_t i = 0; i < sh.size(); ++i) {
        const std::string p = a.at("shapes") + "[" + std::to_string(i) + "]";
        if (!sh[i].is_string()) throw ConfigError(p, "expected a string");
        try {
          c.axes.shapes.push_back(shape_from_string(sh[i].get<std::string>()));
        } catch (const Error&) {
          throw ConfigError(p, "unknown shape '" + sh[i].get<std::string>() + "'");
        }
      }
    }
    c.axes.energy_from_entry = a.boolean("energy_from_entry", false);
    a.finish();
  }
  if (r.has("reflection")) {
    auto o = r.child("reflection");
    auto& x = c.reflection;
    x.rtol = o.number("rtol", x.rtol);
    x.decay_target = o.number("decay_target", x.decay_target);
    x.wkb_tolerance = o.number("wkb_tolerance", x.wkb_tolerance);
    x.fit_wavelengths = o.number("fit_wavelengths", x.fit_wavelengths);
    x.fit_min_samples = o.integer("fit_min_samples", x.fit_min_samples);
    x.window_shift = o.number("window_shift", x.window_shift);
    x.stability_tol = o.number("stability_tol", x.stability_tol);
    x.arc_radius = o.number("arc_radius", x.arc_radius);
    x.omega_min = o.number("omega_min", x.omega_min, true);
    x.omega_max = o.number("omega_max", x.omega_max, true);
    x.flux_tol = o.number("flux_tol", x.flux_tol);
    o.finish();
  }
  if (r.has("tdse")) {
    auto o = r.child("tdse");
    auto& x = c.tdse;
    x.dx = o.number("dx", x.dx, true);
    x.inner_length = o.number("inner_length", x.inner_length, true);
    x.absorber_width = o.number("absorber_width", x.absorber_width, true);
    x.absorber_strength = o.number("absorber_strength", x.absorber_strength, true);
    x.du = o.number("du", x.du, true);
    x.time_stretch = o.number("time_stretch", x.time_stretch, true);
    x.t_min = o.number("t_min", x.t_min, true);
    x.samples = o.integer("samples", x.samples);
    x.max_states = o.integer("max_states", x.max_states);
    x.absorber = o.boolean("absorber", x.absorber);
    x.self_check = o.boolean("self_check", x.self_check);
    x.self_check_tol = o.number("self_check_tol", x.self_check_tol);
    x.dx_factor = o.number("dx_factor", x.dx_factor);
    x.dt_factor = o.number("dt_factor", x.dt_factor);
    x.start_phase = o.number("start_phase", x.start_phase);
    x.absorber_wavelengths = o.number("absorber_wavelengths", x.absorber_wavelengths);
    x.start_factor = o.number("start_factor", x.start_factor);
    o.finish();
  }
  c.traces = r.boolean("traces", c.traces);
  c.output = r.string("output", c.output);
  c.threads = r.integer("threads", c.threads);
  r.finish();
  validate(c);
  return c;
}

inline RunConfig parse_config(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::ordered_json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

inline bool operator==(const ReflectionOptions& a, const ReflectionOptions& b) {
  using detail::same_number;
  return a.rtol == b.rtol && a.decay_target == b.decay_target && a.wkb_tolerance == b.wkb_tolerance &&
         a.fit_wavelengths == b.fit_wavelengths && a.fit_min_samples == b.fit_min_samples &&
         a.window_shift == b.window_shift && a.stability_tol == b.stability_tol && a.arc_radius == b.arc_radius &&
         same_number(a.omega_min, b.omega_min) && same_number(a.omega_max, b.omega_max) &&
         a.record_trajectory == b.record_trajectory && a.flux_tol == b.flux_tol;
}

inline bool operator==(const TdseOptions& a, const TdseOptions& b) {
  using detail::same_number;
  return same_number(a.dx, b.dx) && same_number(a.inner_length, b.inner_length) &&
         same_number(a.absorber_width, b.absorber_width) && same_number(a.absorber_strength, b.absorber_strength) &&
         same_number(a.du, b.du) && same_number(a.time_stretch, b.time_stretch) && same_number(a.t_min, b.t_min) &&
         a.samples == b.samples && a.max_states == b.max_states && a.absorber == b.absorber &&
         a.self_check == b.self_check && a.self_check_tol == b.self_check_tol && a.dx_factor == b.dx_factor &&
         a.dt_factor == b.dt_factor && a.start_phase == b.start_phase &&
         a.absorber_wavelengths == b.absorber_wavelengths && a.start_factor == b.start_factor;
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  const auto& s = a.trap;
  const auto& t = b.trap;
  return a.experiment == b.experiment && a.version == b.version && s.shape == t.shape &&
         s.half_width == t.half_width && s.mass == t.mass && s.threshold_offset == t.threshold_offset &&
         s.rate == t.rate && a.methods == b.methods && a.axes == b.axes && a.reflection == b.reflection &&
         a.tdse == b.tdse && a.traces == b.traces && a.output == b.output && a.threads == b.threads;
}

// Tighter grids and tolerances for the full cross-oracle band.
inline void apply_high_accuracy(RunConfig& c) {
  c.tdse.dx_factor *= 0.5;
  c.tdse.dt_factor *= 0.5;
  c.tdse.self_check = true;
  c.reflection.rtol = std::min(c.reflection.rtol, 1e-12);
  c.reflection.stability_tol = std::min(c.reflection.stability_tol, 1e-5);
}

// base · 10^{k/per_decade}, k = 0..n-1.
inline std::vector<double> log_grid(double lo, double hi, int per_decade) {
  const int n = static_cast<int>(std::lround(std::log10(hi / lo) * per_decade));
  std::vector<double> g;
  for (int k = 0; k <= n; ++k) g.push_back(lo * std::pow(10.0, static_cast<double>(k) / per_decade));
  return g;
}

inline RunConfig RunConfig::preset(const std::string& name) {
  using K = Method::Kind;
  RunConfig c;
  c.experiment = name;
  c.output = "out/" + name;
  if (name == "fig3") {
    c.trap = TrapSpec::zero_range(0.0, 1.0);
    c.methods = {{K::ReflectionSingle}, {K::Tdse}};
    c.axes.x = XAxis::Gamma;
    for (int i = 0; i <= 32; ++i) c.axes.gamma.push_back(-4.0 + 0.25 * i);
  } else if (name == "fig4") {
    c.trap = TrapSpec::zero_range(0.0, 1.0);
    c.methods = {{K::ReflectionSingle}};
    c.axes.energy = {-1.0, 0.0, 1.0};
    c.axes.rate = log_grid(1e-2, 1e5, 2);
  } else if (name == "fig5") {
    c.trap = TrapSpec::zero_range(0.0, 1.0);
    c.methods = {{K::Tdse}};
    c.axes.x = XAxis::Gamma;
    c.axes.gamma = {-1.0, 0.0, 1.0};
    c.traces = true;
  } else if (name == "fig8") {
    c.trap = TrapSpec::rectangular(0.5, 0.0, 1.0);
    c.methods = {{K::Tdse}, {K::ReflectionSingle}, {K::ReflectionSingleM2}};
    c.axes.energy = {-4.0, -2.0, 0.0, 2.0, 4.0};
    c.axes.rate = log_grid(0.05, 500.0, 4);
  } else if (name == "fig9") {
    c.trap = TrapSpec::rectangular(0.5, 0.0, 1.0);
    c.methods = {{K::Tdse}};
    c.axes.energy = {0.0};
    c.axes.rate = {0.05, 10.0, 200.0};
    c.traces = true;
  } else if (name == "fig10a") {
    c.trap = TrapSpec::rectangular(0.5, 0.0, 1.0);
    c.methods = {{K::ReflectionSingle}, {K::Analytic}};
    c.axes.shapes = {Shape::Rectangular, Shape::ParabolicCutoff};
    c.axes.energy = {0.0};
    c.axes.rate = log_grid(1e-3, 10.0, 2);
  } else if (name == "fig10b") {
    c.trap = TrapSpec::rectangular(0.5, 0.0, 1.0);
    c.methods = {{K::ReflectionSingle}, {K::Analytic}};
    c.axes.energy = {0.0, -0.015};
    c.axes.channels = {0, 2, 4, 6};
    c.axes.energy_from_entry = true;
    c.axes.rate = log_grid(1e-5, 10.0, 2);
  } else {
    throw ConfigError("preset", "unknown preset '" + name + "' (fig3, fig4, fig5, fig8, fig9, fig10a, fig10b)");
  }
  validate(c);
  return c;
}

inline std::vector<std::string> preset_names() { return {"fig3", "fig4", "fig5", "fig8", "fig9", "fig10a", "fig10b"}; }

// One (curve, row, method) evaluation.
struct SweepPoint {
  std::size_t curve = 0, row = 0, method = 0;
  TrapSpec spec;
  int channel = 0;
  double x = 0.0;
};

struct PointOutcome {
  double value = std::numeric_limits<double>::quiet_NaN();
  double runtime = 0.0;  // seconds; manifest only
  nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
  std::string error;
};

struct Curve {
  Shape shape;
  int channel;
  double fixed;  // the non-x axis value (energy or rate); NaN for gamma sweeps
  std::string file;
};

struct SweepPlan {
  std::vector<Curve> curves;
  std::vector<double> xs;
  std::vector<SweepPoint> points;  // config order: curve, row, method
};

inline std::string number_tag(double x) {
  std::string s = format_number(x);
  for (auto& ch : s)
    if (ch == '-') ch = 'm';
    else if (ch == '.') ch = 'p';
    else if (ch == '+') ch = 'p';
  return s;
}

inline SweepPlan plan_sweep(const RunConfig& c) {
  validate(c);
  SweepPlan p;
  const auto& a = c.axes;
  const std::vector<Shape> shapes = a.shapes.empty() ? std::vector<Shape>{c.trap.shape} : a.shapes;
  std::vector<double> fixed;
  if (a.x == XAxis::Gamma) {
    p.xs = a.gamma;
    fixed = {std::numeric_limits<double>::quiet_NaN()};
  } else if (a.x == XAxis::Rate) {
    p.xs = a.rate;
    fixed = a.energy.empty() ? std::vector<double>{c.trap.threshold_offset} : a.energy;
  } else {
    p.xs = a.energy;
    fixed = a.rate.empty() ? std::vector<double>{c.trap.rate} : a.rate;
  }
  for (Shape sh : shapes)
    for (double f : fixed)
      for (int ch : a.channels) {
        std::string file = to_string(sh);
        if (a.x == XAxis::Rate) file += "_E" + number_tag(f);
        if (a.x == XAxis::Energy) file += "_v" + number_tag(f);
        file += "_m" + std::to_string(ch) + ".csv";
        p.curves.push_back({sh, ch, f, file});
      }
  for (std::size_t ci = 0; ci < p.curves.size(); ++ci) {
    const auto& cv = p.curves[ci];
    for (std::size_t r = 0; r < p.xs.size(); ++r) {
      TrapSpec s = c.trap;
      s.shape = cv.shape;
      double e = 0.0, v = 1.0;
      if (a.x == XAxis::Gamma) {
        s.mass = 1.0;
        e = p.xs[r];
      } else if (a.x == XAxis::Rate) {
        e = cv.fixed;
        v = p.xs[r];
      } else {
        e = p.xs[r];
        v = cv.fixed;
      }
      s.rate = v;
      s.threshold_offset = 0.0;
      if (a.energy_from_entry && s.shape != Shape::ZeroRange) e += entry_strength(s, cv.channel / 2);
      s.threshold_offset = e;
      for (std::size_t m = 0; m < c.methods.size(); ++m) p.points.push_back({ci, r, m, s, cv.channel, p.xs[r]});
    }
  }
  return p;
}

inline nlohmann::ordered_json survival_diagnostics(const SurvivalResult& r) {
  return {{"fit_residual", r.fit_residual},
          {"window_sensitivity", r.window_sensitivity},
          {"window_stable", r.window_stable},
          {"omega_min", r.omega_min},
          {"omega_max", r.omega_max},
          {"arc_radius", r.arc_radius}};
}

inline nlohmann::ordered_json grid_json(const TdseGrid& g) {
  return {{"dx", g.dx},
          {"points", g.points},
          {"inner_length", g.inner_length},
          {"absorber_width", g.absorber_width},
          {"absorber_strength", g.absorber_strength},
          {"du", g.du},
          {"time_stretch", g.time_stretch},
          {"t_min", g.t_min}};
}

inline PointOutcome evaluate_point(const RunConfig& c, const SweepPoint& pt, const std::string& trace_dir = "") {
  using K = Method::Kind;
  PointOutcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const Method& m = c.methods[pt.method];
  try {
    switch (m.kind) {
      case K::ReflectionSingle:
      case K::ReflectionSingleM2: {
        const auto r = solve_single_sturmian(pt.spec, pt.channel, m.kind == K::ReflectionSingleM2, c.reflection);
        out.value = r.p(0, 0);
        out.diagnostics = survival_diagnostics(r);
        break;
      }
      case K::ReflectionCoupled: {
        const auto r = solve_coupled(pt.spec, pt.channel, m.coupled, c.reflection);
        const auto k = static_cast<std::size_t>(pt.channel / 2);
        out.value = r.p(k, k);
        out.diagnostics = survival_diagnostics(r);
        out.diagnostics["p_total"] = r.p_total[k];
        break;
      }
      case K::Tdse: {
        const auto r = evolve(pt.spec, pt.channel, c.tdse);
        out.value = r.p(pt.channel);
        out.diagnostics = {{"grid", grid_json(r.grid)}, {"norm_final", r.norm_final}, {"steps", r.steps}};
        if (!std::isnan(r.self_check_change)) out.diagnostics["self_check_change"] = r.self_check_change;
        if (!trace_dir.empty()) trace_csv(r).write(trace_dir);
        break;
      }
      case K::Analytic: {
        double rel = pt.spec.threshold_offset;
        if (pt.spec.shape != Shape::ZeroRange) {
          TrapSpec s = pt.spec;
          s.threshold_offset = 0.0;
          rel -= entry_strength(s, pt.channel / 2);
        }
        // Closed form exists only at the threshold touch.
        out.value = std::abs(rel) < 1e-12 ? universal_constant() : std::numeric_limits<double>::quiet_NaN();
        break;
      }
    }
  } catch (const Error& e) {
    out.error = e.what();
  }
  out.runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// Runs f(i) for i in [0, n) on `threads` workers; f must not throw.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) f(i);
  };
  std::vector<std::jthread> pool;
  for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
}

struct SweepResult {
  SweepPlan plan;
  std::vector<PointOutcome> outcomes;
  std::vector<CsvTable> tables;  // one per curve
  nlohmann::ordered_json manifest;
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& o : outcomes) n += !o.error.empty();
    return n;
  }
};

// Every numeric tolerance the sweep can use, including fixed internal ones.
inline nlohmann::ordered_json tolerance_manifest(const RunConfig& c) {
  return {{"reflection", to_json(c.reflection)},
          {"tdse", to_json(c.tdse)},
          {"internal",
           {{"csv_significant_digits", 15},
            {"analytic_threshold_match", 1e-12},
            {"reflection_step_underflow_rel", 1e-13},
            {"reflection_fit_collinearity", 1e-10},
            {"branch_newton_rel", 1e-13},
            {"branch_predictor_tol", 1e-3},
            {"branch_root_bisection_rel", 1e-15},
            {"coupling_omega_guard", 1e-6},
            {"profile_quadrature_rel", 1e-15},
            {"polynomial_bound_state_residual", 1e-6},
            {"taylor_series_truncation_rel", 1e-18},
            {"hankel_series_truncation_rel", 1e-17},
            {"tdse_sturm_bisection_rel", 1e-14},
            {"tdse_rayleigh_convergence_rel", 1e-13},
            {"tdse_rayleigh_check_rel", 1e-9},
            {"tdse_rayleigh_iterations", 3},
            {"tdse_time_inversion_rel", 1e-15},
            {"threshold_pole_fit_tol", 1e-3}}}};
}

inline std::string output_directory(const RunConfig& c) {
  if (const char* env = std::getenv("STURMTRAP_OUTPUT_DIR"); env && *env) return env;
  return c.output;
}

inline SweepResult run_sweep(const RunConfig& c, bool write = true) {
  namespace fs = std::filesystem;
  SweepResult res;
  res.plan = plan_sweep(c);
  const auto& plan = res.plan;
  const std::string dir = output_directory(c);
  if (write) {
    fs::create_directories(dir);
    if (c.traces) fs::create_directories(fs::path(dir) / "traces");
  }
  res.outcomes.resize(plan.points.size());
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(plan.points.size(), static_cast<unsigned>(c.threads), [&](std::size_t i) {
    const auto& pt = plan.points[i];
    std::string trace;
    if (write && c.traces && c.methods[pt.method].kind == Method::Kind::Tdse)
      trace = (fs::path(dir) / "traces" /
               (fs::path(plan.curves[pt.curve].file).stem().string() + "_x" + number_tag(pt.x) + ".csv"))
                  .string();
    res.outcomes[i] = evaluate_point(c, pt, trace);
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string xname = to_string(c.axes.x);
  std::size_t idx = 0;
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& cv : plan.curves) {
    std::vector<std::string> cols{xname};
    for (const auto& m : c.methods) cols.push_back(m.column());
    CsvTable t(cols);
    t.meta("experiment", c.experiment);
    t.meta("version", std::to_string(c.version));
    t.meta("shape", to_string(cv.shape));
    t.meta("channel", std::to_string(cv.channel));
    if (cv.shape != Shape::ZeroRange) t.meta("half_width", c.trap.half_width);
    t.meta("mass", c.axes.x == XAxis::Gamma ? 1.0 : c.trap.mass);
    if (c.axes.x == XAxis::Rate) t.meta("energy", cv.fixed);
    if (c.axes.x == XAxis::Energy) t.meta("rate", cv.fixed);
    t.meta("energy_from_entry", c.axes.energy_from_entry ? "true" : "false");
    std::string ms;
    for (const auto& m : c.methods) ms += (ms.empty() ? "" : ";") + m.name();
    t.meta("methods", ms);
    t.meta("quantity", "P_stay[m][m]; empty methods are NaN");
    for (std::size_t r = 0; r < plan.xs.size(); ++r) {
      std::vector<double> row{plan.xs[r]};
      for (std::size_t m = 0; m < c.methods.size(); ++m, ++idx) {
        const auto& o = res.outcomes[idx];
        row.push_back(o.value);
        nlohmann::ordered_json pj = {{"file", cv.file},
                             {"x", plan.xs[r]},
                             {"method", c.methods[m].name()},
                             {"value", detail::num(o.value)},
                             {"runtime_s", o.runtime},
                             {"diagnostics", o.diagnostics}};
        if (!o.error.empty()) pj["error"] = o.error;
        points.push_back(pj);
      }
      t.row(row);
    }
    res.tables.push_back(std::move(t));
  }

  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& cv : plan.curves) files.push_back(cv.file);
  res.manifest = {{"config", to_json(c)},
                  {"versions",
                   {{"sturmtrap", library_version},
                    {"compiler", __VERSION__},
                    {"cplusplus", __cplusplus},
                    {"boost", BOOST_LIB_VERSION},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                  {"tolerances", tolerance_manifest(c)},
                  {"files", files},
                  {"points", points},
                  {"failures", res.failures()},
                  {"total_runtime_s", total}};

  if (write) {
    for (std::size_t i = 0; i < plan.curves.size(); ++i) res.tables[i].write((fs::path(dir) / plan.curves[i].file).string());
    std::ofstream f(fs::path(dir) / "manifest.json");
    f << res.manifest.dump(2) << '\n';
    std::ofstream cf(fs::path(dir) / "config.json");
    cf << dump_config(c);
  }
  return res;
}

}  // namespace sturmtrap
