#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "atraj.hpp"
#include "ball_config.hpp"
#include "cone_billiard.hpp"
#include "geometry.hpp"
#include "numeric.hpp"
#include "simulator.hpp"

namespace hardball {

using nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Scalars
// ---------------------------------------------------------------------------

/// Decimal (or p/q) form that reparses to the identical value at the
/// scalar's precision.
template <class S>
std::string scalar_to_string(const S& x) {
  if constexpr (is_exact_v<S>) {
    std::ostringstream os;
    os << numerator(x) << "/" << denominator(x);
    return os.str();
  } else {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<S>::max_digits10) << x;
    return os.str();
  }
}

template <class S>
S scalar_from_string(const std::string& text) {
  if constexpr (is_exact_v<S>) {
    const auto slash = text.find('/');
    if (slash == std::string::npos) return Rational(BigInt(text));
    return Rational(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
  } else if constexpr (std::is_same_v<S, double>) {
    return std::stod(text);
  } else {
    return S(text);
  }
}

/// Doubles travel as JSON numbers (round-trip exact); wider and exact
/// scalars travel as strings.
template <class S>
json scalar_to_json(const S& x) {
  if constexpr (std::is_same_v<S, double>)
    return x;
  else
    return scalar_to_string(x);
}

template <class S>
S scalar_from_json(const json& j) {
  if (j.is_string()) return scalar_from_string<S>(j.get<std::string>());
  return S(j.get<double>());
}

template <class S>
json vec_to_json(const Vec<S>& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(scalar_to_json(x));
  return a;
}

template <class S>
Vec<S> vec_from_json(const json& j) {
  Vec<S> v;
  for (const auto& x : j) v.push_back(scalar_from_json<S>(x));
  return v;
}

// ---------------------------------------------------------------------------
// Ball configurations
// ---------------------------------------------------------------------------

template <class S>
json config_to_json(const BallConfiguration<S>& q) {
  json centers = json::array();
  for (int i = 1; i <= q.count; ++i) centers.push_back(vec_to_json(q.center(i)));
  json out = {{"d", q.dim}, {"n", q.count}, {"centers", centers}};
  if (!q.certified_contacts.empty()) {
    json contacts = json::array();
    for (const auto& p : q.certified_contacts) contacts.push_back(json::array({p.first, p.second}));
    out["contacts"] = contacts;
  }
  return out;
}

template <class S>
BallConfiguration<S> config_from_json(const json& j) {
  BallConfiguration<S> q(j.at("d").get<int>(), j.at("n").get<int>());
  const auto& centers = j.at("centers");
  for (int i = 1; i <= q.count; ++i) {
    const Vec<S> c = vec_from_json<S>(centers.at(i - 1));
    for (int a = 0; a < q.dim; ++a) q.coord(i, a) = c[a];
  }
  if (j.contains("contacts"))
    for (const auto& p : j.at("contacts"))
      q.certified_contacts.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  return q;
}

/// One center per row, comma separated.
template <class S>
std::string config_to_csv(const BallConfiguration<S>& q) {
  std::ostringstream os;
  for (int i = 1; i <= q.count; ++i) {
    for (int a = 0; a < q.dim; ++a) {
      if (a) os << ",";
      os << scalar_to_string(q.coord(i, a));
    }
    os << "\n";
  }
  return os.str();
}

template <class S>
BallConfiguration<S> config_from_csv(const std::string& text) {
  std::vector<Vec<S>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    Vec<S> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(scalar_from_string<S>(cell));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw PreconditionError("config_from_csv: no rows");
  BallConfiguration<S> q(int(rows[0].size()), int(rows.size()));
  for (int i = 1; i <= q.count; ++i) {
    if (int(rows[i - 1].size()) != q.dim) throw PreconditionError("config_from_csv: ragged rows");
    for (int a = 0; a < q.dim; ++a) q.coord(i, a) = rows[i - 1][a];
  }
  return q;
}

// ---------------------------------------------------------------------------
// Trajectories and schedules
// ---------------------------------------------------------------------------

template <class S>
json trajectory_to_json(const PLTrajectory<S>& f) {
  json events = json::array();
  for (const auto& e : f.events)
    events.push_back({{"t", scalar_to_json(e.time)}, {"post_slopes", vec_to_json(e.post_slopes)}});
  return {{"m", f.coords()},
          {"t_start", scalar_to_json(f.t_start)},
          {"t_end", scalar_to_json(f.t_end)},
          {"start_values", vec_to_json(f.start_values)},
          {"start_slopes", vec_to_json(f.start_slopes)},
          {"events", events}};
}

template <class S>
PLTrajectory<S> trajectory_from_json(const json& j) {
  PLTrajectory<S> f;
  f.t_start = scalar_from_json<S>(j.at("t_start"));
  f.t_end = scalar_from_json<S>(j.at("t_end"));
  f.start_values = vec_from_json<S>(j.at("start_values"));
  f.start_slopes = vec_from_json<S>(j.at("start_slopes"));
  for (const auto& e : j.at("events")) {
    typename PLTrajectory<S>::Event ev;
    ev.time = scalar_from_json<S>(e.at("t"));
    ev.post_slopes = vec_from_json<S>(e.at("post_slopes"));
    f.events.push_back(std::move(ev));
  }
  return f;
}

/// One row per vanishing coordinate per event:
/// t_event, coordinate (1-based), m pre-slopes, m post-slopes.
template <class S>
std::string trajectory_to_csv(const PLTrajectory<S>& f) {
  const int m = f.coords();
  std::ostringstream os;
  os << "t_event,coordinate";
  for (int i = 1; i <= m; ++i) os << ",pre_slope_" << i;
  for (int i = 1; i <= m; ++i) os << ",post_slope_" << i;
  os << "\n";
  using std::abs;
  Vec<S> vals = f.start_values;
  S cur = f.t_start;
  const Vec<S>* slopes = &f.start_slopes;
  const S tol = is_exact_v<S> ? S(0) : Tol<S>::residual();
  for (std::size_t k = 0; k < f.events.size(); ++k) {
    const auto& e = f.events[k];
    const S dt = e.time - cur;
    for (int i = 0; i < m; ++i) vals[i] += dt * (*slopes)[i];
    for (int i = 0; i < m; ++i) {
      if (abs(vals[i]) <= tol) {
        os << scalar_to_string(e.time) << "," << (i + 1);
        for (int c = 0; c < m; ++c) os << "," << scalar_to_string((*slopes)[c]);
        for (int c = 0; c < m; ++c) os << "," << scalar_to_string(e.post_slopes[c]);
        os << "\n";
        vals[i] = S(0);
      }
    }
    cur = e.time;
    slopes = &e.post_slopes;
  }
  return os.str();
}

inline json schedule_to_json(const RootSchedule& sched) {
  json out = json::object();
  for (std::size_t i = 0; i < sched.progressions.size(); ++i) {
    const auto& p = sched.progressions[i];
    out[std::to_string(i + 1)] = {{"first", scalar_to_json(p.first)},
                                  {"diff", scalar_to_json(p.diff)},
                                  {"len", p.len}};
  }
  return out;
}

inline RootSchedule schedule_from_json(const json& j) {
  RootSchedule sched;
  sched.progressions.resize(j.size());
  for (auto it = j.begin(); it != j.end(); ++it) {
    const int i = std::stoi(it.key());
    if (i < 1 || i > int(sched.progressions.size()))
      throw PreconditionError("schedule_from_json: bad coordinate key");
    ProgressionSpec p;
    p.first = scalar_from_json<Rational>(it.value().at("first"));
    p.diff = scalar_from_json<Rational>(it.value().at("diff"));
    p.len = it.value().at("len").get<long long>();
    sched.progressions[i - 1] = p;
  }
  return sched;
}

// ---------------------------------------------------------------------------
// Matrices, angles, cones
// ---------------------------------------------------------------------------

template <class S>
json matrix_to_json(const AdmissibleMatrix<S>& a) {
  json rows = json::array();
  for (int i = 0; i < a.m; ++i) {
    json row = json::array();
    for (int j = 0; j < a.m; ++j) row.push_back(scalar_to_json(a(i, j)));
    rows.push_back(row);
  }
  return {{"m", a.m}, {"entries", rows}};
}

template <class S>
AdmissibleMatrix<S> matrix_from_json(const json& j) {
  AdmissibleMatrix<S> a(j.at("m").get<int>());
  for (int i = 0; i < a.m; ++i)
    for (int c = 0; c < a.m; ++c) a(i, c) = scalar_from_json<S>(j.at("entries").at(i).at(c));
  return a;
}

/// Keys are "i,j" pairs, 1-based.
template <class S>
json angles_to_json(const AngleAssignment<S>& a) {
  json out = json::object();
  for (const auto& [pair, alpha] : a.alpha)
    out[std::to_string(pair.first) + "," + std::to_string(pair.second)] = scalar_to_json(alpha);
  return out;
}

template <class S>
AngleAssignment<S> angles_from_json(const json& j, int m) {
  AngleAssignment<S> a;
  a.m = m;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto comma = it.key().find(',');
    if (comma == std::string::npos) throw PreconditionError("angles_from_json: bad key");
    const int i = std::stoi(it.key().substr(0, comma));
    const int jj = std::stoi(it.key().substr(comma + 1));
    a.alpha[IndexPair(i, jj)] = scalar_from_json<S>(it.value());
  }
  return a;
}

template <class S>
json cone_to_json(const PolyhedralCone<S>& cone) {
  json normals = json::array();
  for (const auto& nu : cone.normals) normals.push_back(vec_to_json(nu));
  json gram = json::array();
  for (int i = 0; i < cone.faces(); ++i) {
    json row = json::array();
    for (int j = 0; j < cone.faces(); ++j) row.push_back(scalar_to_json(cone.gram(i, j)));
    gram.push_back(row);
  }
  json out = {{"ambient_dim", cone.ambient}, {"normals", normals}, {"gram", gram}};
  if (!cone.wall_pairs.empty()) {
    json pairs = json::array();
    for (const auto& p : cone.wall_pairs) pairs.push_back(json::array({p.first, p.second}));
    out["wall_pairs"] = pairs;
  }
  return out;
}

template <class S>
PolyhedralCone<S> cone_from_json(const json& j) {
  PolyhedralCone<S> cone;
  cone.ambient = j.at("ambient_dim").get<int>();
  for (const auto& nu : j.at("normals")) cone.normals.push_back(vec_from_json<S>(nu));
  const int m = cone.faces();
  cone.gram = Mat<S>(m, m);
  for (int i = 0; i < m; ++i)
    for (int c = 0; c < m; ++c) cone.gram(i, c) = scalar_from_json<S>(j.at("gram").at(i).at(c));
  if (j.contains("wall_pairs"))
    for (const auto& p : j.at("wall_pairs"))
      cone.wall_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  return cone;
}

// ---------------------------------------------------------------------------
// Event logs and states
// ---------------------------------------------------------------------------

template <class S>
std::string cone_events_to_csv(const ConeTrajectory<S>& traj) {
  const int dim = int(traj.x0.size());
  std::ostringstream os;
  os << "t,wall_index";
  for (int a = 1; a <= dim; ++a) os << ",pos_" << a;
  for (int a = 1; a <= dim; ++a) os << ",v_pre_" << a;
  for (int a = 1; a <= dim; ++a) os << ",v_post_" << a;
  os << "\n";
  for (const auto& e : traj.events) {
    os << scalar_to_string(e.time) << "," << e.wall;
    for (const auto& x : e.pos) os << "," << scalar_to_string(x);
    for (const auto& x : e.v_pre) os << "," << scalar_to_string(x);
    for (const auto& x : e.v_post) os << "," << scalar_to_string(x);
    os << "\n";
  }
  return os.str();
}

template <class S>
std::string ball_events_to_csv(const BallEventLog<S>& log) {
  std::ostringstream os;
  if (log.events.empty()) {
    os << "t,i,j\n";
    return os.str();
  }
  const int dn = int(log.events.front().positions.size());
  os << "t,i,j";
  for (int a = 1; a <= dn; ++a) os << ",pos_" << a;
  for (int a = 1; a <= dn; ++a) os << ",v_pre_" << a;
  for (int a = 1; a <= dn; ++a) os << ",v_post_" << a;
  os << "\n";
  for (const auto& e : log.events) {
    os << scalar_to_string(e.time) << "," << e.pair.first << "," << e.pair.second;
    for (const auto& x : e.positions) os << "," << scalar_to_string(x);
    for (const auto& x : e.v_pre) os << "," << scalar_to_string(x);
    for (const auto& x : e.v_post) os << "," << scalar_to_string(x);
    os << "\n";
  }
  return os.str();
}

template <class S>
json state_to_json(const BallSystemState<S>& s) {
  json pos = json::array(), vel = json::array();
  for (int i = 1; i <= s.config.count; ++i) {
    pos.push_back(vec_to_json(s.config.center(i)));
    Vec<S> v(s.config.dim);
    for (int a = 0; a < s.config.dim; ++a) v[a] = s.vel(i, a);
    vel.push_back(vec_to_json(v));
  }
  return {{"d", s.config.dim},
          {"n", s.config.count},
          {"positions", pos},
          {"velocities", vel},
          {"time", scalar_to_json(s.time)}};
}

template <class S>
BallSystemState<S> state_from_json(const json& j) {
  BallSystemState<S> s;
  s.config = BallConfiguration<S>(j.at("d").get<int>(), j.at("n").get<int>());
  s.velocities.assign(std::size_t(s.config.dim) * s.config.count, S(0));
  for (int i = 1; i <= s.config.count; ++i) {
    const Vec<S> p = vec_from_json<S>(j.at("positions").at(i - 1));
    const Vec<S> v = vec_from_json<S>(j.at("velocities").at(i - 1));
    for (int a = 0; a < s.config.dim; ++a) {
      s.config.coord(i, a) = p[a];
      s.vel(i, a) = v[a];
    }
  }
  s.time = scalar_from_json<S>(j.at("time"));
  return s;
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

struct ArtifactRef {
  std::string path;  // relative to the manifest directory
  std::string kind;  // config | trajectory | schedule | matrix | angles | cone
                     // | cone_events | ball_events | state | table
};

struct RunManifest {
  std::string command;
  json parameters = json::object();
  std::string version = kVersion;
  int precision_bits = 53;
  std::vector<ArtifactRef> artifacts;
  json outcome = json::object();
};

inline json manifest_to_json(const RunManifest& man) {
  json arts = json::array();
  for (const auto& a : man.artifacts) arts.push_back({{"path", a.path}, {"kind", a.kind}});
  return {{"command", man.command},   {"parameters", man.parameters},
          {"version", man.version},   {"precision_bits", man.precision_bits},
          {"artifacts", arts},        {"outcome", man.outcome}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest man;
  man.command = j.at("command").get<std::string>();
  man.parameters = j.at("parameters");
  man.version = j.at("version").get<std::string>();
  man.precision_bits = j.at("precision_bits").get<int>();
  for (const auto& a : j.at("artifacts"))
    man.artifacts.push_back({a.at("path").get<std::string>(), a.at("kind").get<std::string>()});
  man.outcome = j.at("outcome");
  return man;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
  return json::parse(read_text_file(path));
}

}  // namespace hardball
