// io.hpp — run configuration, CSV/snapshot artifact writers, and the run
// manifest.
#pragma once

#include "magsteady/field.hpp"

#include <map>
#include <string>
#include <vector>

namespace magsteady {

// Sectioned key = value text config; '#' starts a comment. Errors carry the
// file name and line number.
class Config {
 public:
  static Config from_file(const std::string& path);
  static Config from_string(const std::string& text,
                            const std::string& name = "<inline>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& dflt) const;
  double get_double(const std::string& section, const std::string& key,
                    double dflt) const;
  int get_int(const std::string& section, const std::string& key,
              int dflt) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool dflt) const;
  std::vector<double> get_list(const std::string& section,
                               const std::string& key,
                               const std::vector<double>& dflt) const;
  const std::string& source_name() const { return name_; }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> kv_;
  std::string name_;
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& what) const;
};

struct RunConfig {
  // geometry
  double R = 0.3, r = 0.1, box_side = 1.0;
  int cells = 48;
  // boundary
  int winding = 1;
  double boundary_perturbation = 0.0;
  // solver
  SolverParams params;
  // schedules
  std::vector<double> lambdas{50, 100, 200, 400, 800, 1600};
  std::vector<double> gammas{0.0, 0.05, 0.1, 0.2, 0.4};
  // spectrum
  int spectrum_k = 4;
  double spectrum_shift = 0.0;
  double tbound_beta = 1.0;
  int tbound_samples = 10;
  // dynamics
  double T_max = 0.1;
  double dt_safety = 0.9;
  int n_perturbations = 10;
  double epsilon = 1e-3;
  // toggles
  bool demag_on = true;
  bool coupling_on = true;
  // output
  std::string outdir = "out";
  int snapshot_cadence = 1;

  static RunConfig from_config(const Config& c);
  void validate() const;
};

struct LinFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Artifact bookkeeping: every file written goes through the manifest so the
// run output is self-describing.
class Manifest {
 public:
  Manifest(std::string outdir, std::string command);
  const std::string& outdir() const { return outdir_; }
  std::string path(const std::string& filename);  // registers the artifact
  void note(const std::string& key, const std::string& value);
  void note(const std::string& key, double value);
  void timing(const std::string& stage, double seconds);
  void write();  // writes manifest.json

 private:
  std::string outdir_, command_;
  std::vector<std::string> files_;
  std::vector<std::pair<std::string, std::string>> notes_;
  std::vector<std::pair<std::string, double>> timings_;
};

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

void write_field_snapshot(const std::string& path, const AngleField& a);
AngleField read_field_snapshot(const std::string& path,
                               std::shared_ptr<const DomainMask> mask,
                               std::shared_ptr<const ReferenceAngle> ref);

void write_gnuplot_script(const std::string& path, const std::string& csv,
                          const std::vector<std::string>& columns,
                          bool loglog);

}  // namespace magsteady
