#include "magsteady/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace magsteady {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace

Config Config::from_string(const std::string& text, const std::string& name) {
  Config c;
  c.name_ = name;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    c.kv_[section + "." + key] = {trim(line.substr(eq + 1)), lineno};
  }
  return c;
}

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_string(ss.str(), path);
}

const Config::Entry* Config::find(const std::string& section,
                                  const std::string& key) const {
  auto it = kv_.find(section + "." + key);
  return it == kv_.end() ? nullptr : &it->second;
}

void Config::fail(const Entry& e, const std::string& what) const {
  throw ConfigError(name_ + ":" + std::to_string(e.line) + ": " + what +
                    " (value '" + e.value + "')");
}

bool Config::has(const std::string& s, const std::string& k) const {
  return find(s, k) != nullptr;
}

std::string Config::get_str(const std::string& s, const std::string& k,
                            const std::string& dflt) const {
  const Entry* e = find(s, k);
  return e ? e->value : dflt;
}

double Config::get_double(const std::string& s, const std::string& k,
                          double dflt) const {
  const Entry* e = find(s, k);
  if (!e) return dflt;
  try {
    size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size()) fail(*e, "trailing characters after number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(*e, "not a number");
  }
}

int Config::get_int(const std::string& s, const std::string& k,
                    int dflt) const {
  const Entry* e = find(s, k);
  if (!e) return dflt;
  try {
    size_t pos = 0;
    const long v = std::stol(e->value, &pos, 10);
    if (pos != e->value.size()) fail(*e, "trailing characters after integer");
    return static_cast<int>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    fail(*e, "not an integer");
  }
}

bool Config::get_bool(const std::string& s, const std::string& k,
                      bool dflt) const {
  const Entry* e = find(s, k);
  if (!e) return dflt;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  fail(*e, "not a boolean (use on/off)");
}

std::vector<double> Config::get_list(const std::string& s,
                                     const std::string& k,
                                     const std::vector<double>& dflt) const {
  const Entry* e = find(s, k);
  if (!e) return dflt;
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      fail(*e, "bad list element '" + item + "'");
    }
  }
  if (out.empty()) fail(*e, "empty list");
  return out;
}

RunConfig RunConfig::from_config(const Config& c) {
  RunConfig rc;
  rc.R = c.get_double("geometry", "R", rc.R);
  rc.r = c.get_double("geometry", "r", rc.r);
  rc.box_side = c.get_double("geometry", "box_side", rc.box_side);
  rc.cells = c.get_int("geometry", "cells", rc.cells);
  rc.winding = c.get_int("boundary", "winding", rc.winding);
  rc.boundary_perturbation =
      c.get_double("boundary", "perturbation", rc.boundary_perturbation);
  rc.params.lambda = c.get_double("solver", "lambda", rc.params.lambda);
  rc.params.gamma = c.get_double("solver", "gamma", rc.params.gamma);
  rc.params.linear_tol = c.get_double("solver", "linear_tol", rc.params.linear_tol);
  rc.params.fixed_point_tol =
      c.get_double("solver", "fixed_point_tol", rc.params.fixed_point_tol);
  rc.params.max_iters = c.get_int("solver", "max_iters", rc.params.max_iters);
  rc.params.relaxation = c.get_double("solver", "relaxation", rc.params.relaxation);
  rc.params.lambda_min = c.get_double("solver", "lambda_min", rc.params.lambda_min);
  rc.params.eigen_tol = c.get_double("solver", "eigen_tol", rc.params.eigen_tol);
  rc.params.seed = static_cast<uint64_t>(
      c.get_int("solver", "seed", static_cast<int>(rc.params.seed)));
  rc.lambdas = c.get_list("sweep", "lambdas", rc.lambdas);
  rc.gammas = c.get_list("sweep", "gammas", rc.gammas);
  rc.spectrum_k = c.get_int("spectrum", "k", rc.spectrum_k);
  rc.spectrum_shift = c.get_double("spectrum", "shift", rc.spectrum_shift);
  rc.tbound_beta = c.get_double("spectrum", "tbound_beta", rc.tbound_beta);
  rc.tbound_samples = c.get_int("spectrum", "tbound_samples", rc.tbound_samples);
  rc.T_max = c.get_double("dynamics", "T_max", rc.T_max);
  rc.dt_safety = c.get_double("dynamics", "dt_safety", rc.dt_safety);
  rc.n_perturbations = c.get_int("dynamics", "perturbations", rc.n_perturbations);
  rc.epsilon = c.get_double("dynamics", "epsilon", rc.epsilon);
  rc.demag_on = c.get_bool("toggles", "demag", rc.demag_on);
  rc.coupling_on = c.get_bool("toggles", "coupling", rc.coupling_on);
  rc.outdir = c.get_str("output", "dir", rc.outdir);
  rc.snapshot_cadence = c.get_int("output", "snapshots", rc.snapshot_cadence);
  const char* env = std::getenv("MAGSTEADY_OUTDIR");
  if (env && *env) rc.outdir = env;
  rc.validate();
  return rc;
}

void RunConfig::validate() const {
  GridSpec g{box_side, cells};
  g.validate();
  if (!(r > 0.0) || !(r < R)) throw ConfigError("geometry: need 0 < r < R");
  if (R + r >= 0.5 * box_side - 2.0 * g.h())
    throw ConfigError("geometry: torus does not fit with a 2-cell margin");
  if (winding < 0 || winding > 8)
    throw ConfigError("boundary: winding outside the supported range [0, 8]");
  params.validate();
  if (lambdas.empty()) throw ConfigError("sweep: lambdas must be nonempty");
  if (gammas.empty()) throw ConfigError("sweep: gammas must be nonempty");
  for (double l : lambdas)
    if (!(l > 0.0)) throw ConfigError("sweep: lambda values must be positive");
  for (double g2 : gammas)
    if (g2 < 0.0) throw ConfigError("sweep: gamma values must be >= 0");
  if (spectrum_k < 1) throw ConfigError("spectrum: k must be >= 1");
  if (!(T_max > 0.0)) throw ConfigError("dynamics: T_max must be positive");
  if (!(dt_safety > 0.0) || dt_safety > 1.0)
    throw ConfigError("dynamics: dt_safety must be in (0, 1]");
  if (n_perturbations < 1)
    throw ConfigError("dynamics: perturbations must be >= 1");
  if (!(epsilon > 0.0)) throw ConfigError("dynamics: epsilon must be positive");
}

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("linear_fit: need two samples");
  const size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LinFit f;
  const double det = m * sxx - sx * sx;
  f.slope = (m * sxy - sx * sy) / det;
  f.intercept = (sy - f.slope * sx) / m;
  double ss_res = 0, ss_tot = 0;
  const double ybar = sy / m;
  for (size_t i = 0; i < m; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

Manifest::Manifest(std::string outdir, std::string command)
    : outdir_(std::move(outdir)), command_(std::move(command)) {
  std::filesystem::create_directories(outdir_);
}

std::string Manifest::path(const std::string& filename) {
  files_.push_back(filename);
  return outdir_ + "/" + filename;
}

void Manifest::note(const std::string& key, const std::string& value) {
  notes_.emplace_back(key, value);
}

void Manifest::note(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  notes_.emplace_back(key, buf);
}

void Manifest::timing(const std::string& stage, double seconds) {
  timings_.emplace_back(stage, seconds);
}

void Manifest::write() {
  nlohmann::json j;
  j["command"] = command_;
  j["version"] = "0.1.0";
  j["outputs"] = files_;
  nlohmann::json notes = nlohmann::json::object();
  for (const auto& [k, v] : notes_) notes[k] = v;
  j["config"] = notes;
  nlohmann::json tm = nlohmann::json::object();
  for (const auto& [k, v] : timings_) tm[k] = v;
  j["timings_sec"] = tm;
  std::ofstream f(outdir_ + "/manifest.json");
  f << j.dump(2) << "\n";
  files_.push_back("manifest.json");
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open for writing: " + path);
  std::fprintf(f, "%s\n", header.c_str());
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i)
      std::fprintf(f, "%s%.17g", i ? "," : "", row[i]);
    std::fputc('\n', f);
  }
  std::fclose(f);
}

void write_field_snapshot(const std::string& path, const AngleField& a) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open for writing: " + path);
  const GridSpec& g = a.mask->grid;
  std::fprintf(f, "N %d box_side %.17g winding %d cells %lld\n", g.n,
               g.box_side, a.winding, static_cast<long long>(a.n_cells()));
  std::fprintf(f, "i,j,k,phi,xi\n");
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    const auto [i, j, k] = a.mask->cell_ijk[c];
    std::fprintf(f, "%d,%d,%d,%.17g,%.17g\n", i, j, k, a.phi[c], a.xi[c]);
  }
  std::fclose(f);
}

AngleField read_field_snapshot(const std::string& path,
                               std::shared_ptr<const DomainMask> mask,
                               std::shared_ptr<const ReferenceAngle> ref) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open snapshot: " + path);
  int n = 0, winding = 0;
  long long cells = 0;
  double box = 0.0;
  std::string line;
  std::getline(f, line);
  if (std::sscanf(line.c_str(), "N %d box_side %lf winding %d cells %lld", &n,
                  &box, &winding, &cells) != 4)
    throw ConfigError("snapshot: bad header in " + path);
  if (n != mask->grid.n || cells != mask->n_cells())
    throw ConfigError("snapshot: grid mismatch in " + path);
  std::getline(f, line);  // column header
  AngleField a = make_angle_field(std::move(mask), std::move(ref), winding);
  for (int64_t c = 0; c < a.n_cells(); ++c) {
    std::getline(f, line);
    int i, j, k;
    double phi, xi;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &i, &j, &k, &phi, &xi) !=
        5)
      throw ConfigError("snapshot: bad row in " + path);
    a.phi[c] = phi;
    a.xi[c] = xi;
  }
  return a;
}

void write_gnuplot_script(const std::string& path, const std::string& csv,
                          const std::vector<std::string>& columns,
                          bool loglog) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw ConfigError("cannot open for writing: " + path);
  std::fprintf(f, "set datafile separator ','\n");
  if (loglog) std::fprintf(f, "set logscale xy\n");
  std::fprintf(f, "set key autotitle columnhead\n");
  std::fprintf(f, "plot ");
  for (size_t i = 0; i < columns.size(); ++i)
    std::fprintf(f, "%s'%s' using 1:%s with linespoints", i ? ", " : "",
                 csv.c_str(), columns[i].c_str());
  std::fprintf(f, "\n");
  std::fclose(f);
}

}  // namespace magsteady
