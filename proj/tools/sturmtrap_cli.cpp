// sturmtrap: command-line front end.
//
//   sturmtrap sturmian   --channels 3 --omega-min -20 --omega-max 20 --matrices
//   sturmtrap reflect    --shape rectangular --energy 0 --rate 10 --method reflection-single+M2
//   sturmtrap tdse       --shape zero-range --energy 0 --rate 1 -o trace.csv
//   sturmtrap analytic   --rate 1 | --pole --channel 2
//   sturmtrap sweep      --preset fig3 | --config run.json  [--high-accuracy]
//   sturmtrap acceptance [--only 1,3,9] [--report report.json]
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sturmtrap/acceptance.hpp"
#include "sturmtrap/sturmian_basis.hpp"
#include "sturmtrap/sweep.hpp"

using namespace sturmtrap;

namespace {

struct SpecArgs {
  std::string shape = "rectangular";
  double half_width = 0.5, mass = 1.0, energy = 0.0, rate = 1.0;

  void add(CLI::App* app) {
    app->add_option("--shape", shape, "zero-range | rectangular | parabolic")->capture_default_str();
    app->add_option("--half-width", half_width, "well half-width a")->capture_default_str();
    app->add_option("--mass", mass, "particle mass")->capture_default_str();
    app->add_option("--energy", energy, "threshold offset E")->capture_default_str();
    app->add_option("--rate", rate, "rate v")->capture_default_str();
  }
  TrapSpec spec() const {
    TrapSpec s;
    s.shape = shape_from_string(shape);
    s.half_width = half_width;
    s.mass = mass;
    s.threshold_offset = energy;
    s.rate = rate;
    s.validate();
    return s;
  }
};

void add_reflection_options(CLI::App* app, ReflectionOptions& o) {
  app->add_option("--rtol", o.rtol, "RKF78 local tolerance")->capture_default_str();
  app->add_option("--decay-target", o.decay_target, "decay integral required at omega_max")->capture_default_str();
  app->add_option("--wkb-tolerance", o.wkb_tolerance, "WKB validity at omega_min")->capture_default_str();
  app->add_option("--stability-tol", o.stability_tol, "allowed window shift sensitivity")->capture_default_str();
  app->add_option("--arc-radius", o.arc_radius, "threshold arc radius (0: automatic)")->capture_default_str();
  app->add_option("--omega-min", o.omega_min, "integration start (default automatic)");
  app->add_option("--omega-max", o.omega_max, "integration end (default automatic)");
}

void add_tdse_options(CLI::App* app, TdseOptions& o) {
  app->add_option("--dx", o.dx, "grid spacing (default automatic)");
  app->add_option("--du", o.du, "time step in stretched time (default automatic)");
  app->add_option("--t-min", o.t_min, "start time (default automatic)");
  app->add_option("--samples", o.samples, "trace samples")->capture_default_str();
  app->add_option("--max-states", o.max_states, "bound states tracked")->capture_default_str();
  app->add_flag("--self-check", o.self_check, "rerun at dx/2 and fail if P moves");
  app->add_option("--self-check-tol", o.self_check_tol)->capture_default_str();
  app->add_flag("!--no-absorber", o.absorber, "hard wall instead of the absorbing layer");
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Population retention in a bound state swept through the continuum threshold"};
  app.require_subcommand(1);
  std::string out;

  // sturmian
  auto* st = app.add_subcommand("sturmian", "dump channel potentials W_n(omega) and coupling matrices");
  int st_channels = 3, st_points = 81;
  double st_lo = -20.0, st_hi = 20.0;
  bool st_matrices = false;
  st->add_option("--channels", st_channels, "even channels 0, 2, ..., 2(N-1)")->capture_default_str();
  st->add_option("--omega-min", st_lo)->capture_default_str();
  st->add_option("--omega-max", st_hi)->capture_default_str();
  st->add_option("--points", st_points)->capture_default_str()->check(CLI::PositiveNumber);
  st->add_flag("--matrices", st_matrices, "include M1 and M2");
  st->add_option("-o,--output", out, "output file (default stdout)");

  // reflect
  auto* re = app.add_subcommand("reflect", "solve the reflection problem for P_stay");
  SpecArgs re_spec;
  ReflectionOptions re_opt;
  std::string re_method = "reflection-single";
  int re_channel = 0;
  re_spec.add(re);
  add_reflection_options(re, re_opt);
  re->add_option("--method", re_method, "reflection-single | reflection-single+M2 | reflection-coupled(k)")
      ->capture_default_str();
  re->add_option("--channel", re_channel, "initial even channel m")->capture_default_str();
  re->add_option("-o,--output", out, "output file (default stdout)");

  // tdse
  auto* td = app.add_subcommand("tdse", "time-dependent reference solution with population trace");
  SpecArgs td_spec;
  TdseOptions td_opt;
  int td_channel = 0;
  td_spec.add(td);
  add_tdse_options(td, td_opt);
  td->add_option("--channel", td_channel, "initial even channel m")->capture_default_str();
  td->add_option("-o,--output", out, "output file (default stdout)");

  // analytic
  auto* an = app.add_subcommand("analytic", "threshold solution sqrt(w) H1_{2/5} or the scattering-length pole fit");
  double an_rate = 1.0, an_mass = 1.0, an_lo = -5.0, an_hi = 5.0;
  int an_points = 101, an_channel = 0;
  bool an_pole = false;
  std::string an_shape = "rectangular";
  an->add_option("--rate", an_rate)->capture_default_str();
  an->add_option("--mass", an_mass)->capture_default_str();
  an->add_option("--omega-min", an_lo)->capture_default_str();
  an->add_option("--omega-max", an_hi)->capture_default_str();
  an->add_option("--points", an_points)->capture_default_str()->check(CLI::PositiveNumber);
  an->add_flag("--pole", an_pole, "fit kappa = C(rho0 - rho) near the entry of a finite-range state");
  an->add_option("--shape", an_shape, "shape for --pole")->capture_default_str();
  an->add_option("--channel", an_channel, "even channel for --pole")->capture_default_str();
  an->add_option("-o,--output", out, "output file (default stdout)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "run a figure preset or a custom config");
  std::string sw_preset, sw_config, sw_dir;
  int sw_threads = -1;
  bool sw_high = false, sw_dump = false;
  auto* preset_opt = sw->add_option("--preset", sw_preset, "fig3 | fig4 | fig5 | fig8 | fig9 | fig10a | fig10b");
  sw->add_option("--config", sw_config, "JSON run config")->excludes(preset_opt);
  sw->add_option("--output", sw_dir, "output directory (overrides the config)");
  sw->add_option("--threads", sw_threads, "worker threads (0: all cores)");
  sw->add_flag("--high-accuracy", sw_high, "halve TDSE grids, tighten tolerances, enable the TDSE self-check");
  sw->add_flag("--dump-config", sw_dump, "print the resolved config and exit");

  // acceptance
  auto* ac = app.add_subcommand("acceptance", "run the acceptance criteria; exit 1 on any failure");
  std::vector<int> ac_only;
  std::string ac_report;
  unsigned ac_threads = 0;
  ac->add_option("--only", ac_only, "criteria to run")->delimiter(',');
  ac->add_option("--report", ac_report, "write a JSON report");
  ac->add_option("--threads", ac_threads, "worker threads (0: all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (st->parsed()) {
      const auto ch = rectangular_channels(st_channels, std::min(-2000.0, 1.5 * st_lo), std::max(500.0, 1.5 * st_hi));
      emit(dump_channels(ch, linear_grid(st_lo, st_hi, st_points), st_matrices).str(), out);
    } else if (re->parsed()) {
      const TrapSpec spec = re_spec.spec();
      const Method m = Method::parse(re_method, "--method");
      SurvivalResult r;
      if (m.kind == Method::Kind::ReflectionCoupled) r = solve_coupled(spec, re_channel, m.coupled, re_opt);
      else if (m.kind == Method::Kind::ReflectionSingle || m.kind == Method::Kind::ReflectionSingleM2)
        r = solve_single_sturmian(spec, re_channel, m.kind == Method::Kind::ReflectionSingleM2, re_opt);
      else throw ConfigError("--method", "reflect takes a reflection method");
      std::vector<std::string> cols{"start_channel"};
      for (int n : r.channels) cols.push_back("P_" + std::to_string(n));
      cols.push_back("P_total");
      cols.push_back("loss");
      CsvTable t(cols);
      t.meta("shape", to_string(spec.shape));
      t.meta("half_width", spec.half_width);
      t.meta("mass", spec.mass);
      t.meta("threshold_offset", spec.threshold_offset);
      t.meta("rate", spec.rate);
      t.meta("method", m.name());
      t.meta("fit_residual", r.fit_residual);
      t.meta("window_sensitivity", r.window_sensitivity);
      t.meta("window_stable", r.window_stable ? "true" : "false");
      t.meta("omega_min", r.omega_min);
      t.meta("omega_max", r.omega_max);
      t.meta("arc_radius", r.arc_radius);
      t.meta("steps", static_cast<double>(r.steps));
      for (std::size_t i = 0; i < r.channels.size(); ++i) {
        std::vector<double> row{static_cast<double>(r.channels[i])};
        for (std::size_t j = 0; j < r.channels.size(); ++j) row.push_back(r.p(i, j));
        row.push_back(r.p_total[i]);
        row.push_back(r.loss[i]);
        t.row(row);
      }
      emit(t.str(), out);
    } else if (td->parsed()) {
      emit(trace_csv(evolve(td_spec.spec(), td_channel, td_opt)).str(), out);
    } else if (an->parsed()) {
      if (an_pole) {
        const Shape sh = shape_from_string(an_shape);
        emit(fit_threshold_pole(TrapSpec{sh, 0.5, 1.0, 0.0, 1.0}, an_channel).csv().str(), out);
      } else {
        CsvTable t({"omega", "re_B", "im_B", "abs_B"});
        t.meta("solution", "sqrt(omega) H1_{2/5}(z), z = (2/5)(2 mu)^{1/2} omega^{5/4} / v on the physical sheet");
        t.meta("rate", an_rate);
        t.meta("mass", an_mass);
        t.meta("probability", universal_constant());
        for (double w : linear_grid(an_lo, an_hi, an_points)) {
          const cplx b = analytic_threshold_solution(w, an_rate, an_mass);
          t.row({w, b.real(), b.imag(), std::abs(b)});
        }
        emit(t.str(), out);
      }
    } else if (sw->parsed()) {
      if (sw_preset.empty() && sw_config.empty()) throw ConfigError("sweep", "--preset or --config is required");
      RunConfig c = sw_preset.empty() ? load_config(sw_config) : RunConfig::preset(sw_preset);
      if (!sw_dir.empty()) c.output = sw_dir;
      if (sw_threads >= 0) c.threads = sw_threads;
      if (sw_high) apply_high_accuracy(c);
      validate(c);
      if (sw_dump) {
        std::cout << dump_config(c);
        return 0;
      }
      const auto r = run_sweep(c);
      std::cerr << "wrote " << r.plan.curves.size() << " curve(s) to " << output_directory(c) << " ("
                << r.failures() << " failed point(s))\n";
      return r.failures() == 0 ? 0 : 3;
    } else if (ac->parsed()) {
      AcceptanceOptions o;
      o.only = ac_only;
      o.threads = ac_threads;
      o.on_line = [](const AcceptanceLine& l) { std::cout << l.str() << std::endl; };
      const auto r = run_acceptance(o);
      if (!ac_report.empty()) emit(r.json().dump(2) + "\n", ac_report);
      std::cout << (r.passed() ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << std::endl;
      return r.passed() ? 0 : 1;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
