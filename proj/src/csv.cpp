#include "perimeter/csv.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <string>

namespace perimeter {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct Precision {
  std::ostream& os;
  std::streamsize old;
  explicit Precision(std::ostream& o) : os(o), old(o.precision(12)) {}
  ~Precision() { os.precision(old); }
};

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  Precision p(os);
  const std::size_t ng = t.rows.empty() ? 0 : t.rows.front().queue.size();
  os << "k,t_hours,n";
  for (const char* tag : {"l", "v", "q"})
    for (std::size_t o = 0; o < ng; ++o) os << ',' << tag << '_' << o + 1;
  os << ",d_n,exit_flow\n";
  for (const auto& r : t.rows) {
    os << r.k << ',' << r.t_h << ',' << r.n;
    for (double v : r.queue) os << ',' << v;
    for (double v : r.virtual_queue) os << ',' << v;
    for (double v : r.released) os << ',' << v;
    os << ',' << r.disturbance << ',' << r.exit_flow << '\n';
  }
}

void write_diagnostics_csv(std::ostream& os, const Trajectory& t) {
  Precision p(os);
  std::size_t ng = 0;
  for (const auto& d : t.diagnostics) ng = std::max(ng, d.green_s.size());
  os << "k,status,iterations,stationarity,primal,complementarity,active,fallback,clipped,q_G";
  for (std::size_t o = 0; o < ng; ++o) os << ",g_" << o + 1;
  os << '\n';
  for (const auto& d : t.diagnostics) {
    os << d.k << ',' << d.status << ',' << d.iterations << ',' << d.stationarity << ',' << d.primal << ','
       << d.complementarity << ',' << d.active_constraints << ',' << (d.fallback ? 1 : 0) << ',' << d.clipped
       << ',' << d.global_flow;
    for (std::size_t o = 0; o < ng; ++o) os << ',' << (o < d.green_s.size() ? d.green_s[o] : 0.0);
    os << '\n';
  }
}

void write_metrics_csv(std::ostream& os, const std::vector<RunResult>& runs) {
  Precision p(os);
  os << "scenario,policy,N_o,tts_pn,tts_gates_avg,rqb,gridlock_events\n";
  for (const auto& r : runs) {
    os << quote(r.scenario.name) << ',' << to_string(r.scenario.policy) << ',' << r.scenario.control_horizon
       << ',';
    if (r.ok)
      os << r.metrics.tts_network << ',' << r.metrics.tts_gates_avg << ',' << r.metrics.rqb << ','
         << r.metrics.gridlock_events;
    else
      os << ",,,";
    os << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepResult& sweep) {
  Precision p(os);
  os << "scenario,N_o,ok,tts,tts_gates_avg,rqb,best,error\n";
  for (const auto& r : sweep.rows)
    os << quote(r.scenario) << ',' << r.control_horizon << ',' << (r.ok ? 1 : 0) << ',' << r.tts << ','
       << r.tts_gates_avg << ',' << r.rqb << ',' << (r.best ? 1 : 0) << ',' << quote(r.error) << '\n';
}

void write_comparison_csv(std::ostream& os, const std::vector<RunResult>& runs) {
  Precision p(os);
  os << "scenario,policy,N_o,ok,tts,tts_pn,tts_gates_avg,rqb,served,gridlock_events,fallback_steps,"
        "clip_events,conservation_residual,clamped,error\n";
  for (const auto& r : runs) {
    const auto& m = r.metrics;
    os << quote(r.scenario.name) << ',' << to_string(r.scenario.policy) << ',' << r.scenario.control_horizon
       << ',' << (r.ok ? 1 : 0) << ',' << m.tts << ',' << m.tts_network << ',' << m.tts_gates_avg << ','
       << m.rqb << ',' << m.served << ',' << m.gridlock_events << ',' << m.fallback_steps << ','
       << m.clip_events << ',' << m.conservation_residual << ',' << m.clamped << ',' << quote(r.error)
       << '\n';
  }
}

void write_comparison_pivot(std::ostream& os, const std::vector<RunResult>& runs) {
  Precision p(os);
  std::vector<std::string> scenarios, policies;
  std::map<std::pair<std::string, std::string>, const RunResult*> cell;
  for (const auto& r : runs) {
    const std::string pol = to_string(r.scenario.policy);
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario.name) == scenarios.end())
      scenarios.push_back(r.scenario.name);
    if (std::find(policies.begin(), policies.end(), pol) == policies.end()) policies.push_back(pol);
    cell[{r.scenario.name, pol}] = &r;
  }
  os << "scenario";
  for (const auto& pol : policies) os << ",tts_gates_avg_" << pol;
  os << '\n';
  for (const auto& s : scenarios) {
    os << quote(s);
    for (const auto& pol : policies) {
      os << ',';
      auto it = cell.find({s, pol});
      if (it != cell.end() && it->second->ok) os << it->second->metrics.tts_gates_avg;
    }
    os << '\n';
  }
}

}  // namespace perimeter
