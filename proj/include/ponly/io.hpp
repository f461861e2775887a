#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ponly/data.hpp"
#include "ponly/errors.hpp"
#include "ponly/equivalence.hpp"
#include "ponly/simstudy.hpp"
#include "ponly/solvers.hpp"

namespace ponly {

/// Version string embedded in every artifact.
const char* tool_version();

/// Shortest-exact decimal form with 17 significant digits ("%.17g").
std::string format_double(double v);

// ---------------------------------------------------------------- dataset CSV
//
// Header `y,w,x1,...,xp` (the w column is optional). w carries quadrature
// weights of y=0 rows and must be empty or 0 on y=1 rows. Lines starting
// with '#' are comments. The domain area is supplied separately.

/// Parse error carrying the 1-based line number.
class CsvError : public InvalidArgument {
 public:
  CsvError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads a dataset; rows are regrouped presence first, each group in file
/// order. An all-empty w column means uniform weights.
Dataset read_dataset_csv(std::istream& in, double domain_area);
Dataset read_dataset_csv_file(const std::string& path, double domain_area);

/// Writes `# <line>` for each comment, then the header and rows.
void write_dataset_csv(std::ostream& out, const Dataset& data,
                       const std::vector<std::string>& comments = {});

// ---------------------------------------------------------------- JSON

nlohmann::json to_json(const ModelFit& fit);
nlohmann::json to_json(const EquivalenceReport& report);
nlohmann::json to_json(const Penalty& penalty);
Penalty penalty_from_json(const nlohmann::json& j);

nlohmann::json to_json(const SweepConfig& config);
/// Keys: n1, n0_grid, replicates, estimators, seed, spec_variant (all optional).
SweepConfig sweep_config_from_json(const nlohmann::json& j);

/// {"components": [{"log_weight", "alpha", "beta": [...]}, ...]}
IntensityModel intensity_from_json(const nlohmann::json& j);
nlohmann::json to_json(const IntensityModel& model);

/// {"gamma", "delta": [...], "detection_features": [...],
///  "occurrence": <intensity>, "occurrence_features": [...]}
ThinningModel thinning_from_json(const nlohmann::json& j);

/// {"bounds": [[lo, hi], ...]}
Domain domain_from_json(const nlohmann::json& j);

/// {"type": "identity"} or {"type": "affine", "matrix": [[...]], "offset": [...]}
/// (x = matrix * z + offset).
FeatureMap feature_map_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------- figure data

struct FigureRow {
  std::string estimator;
  std::size_t n0 = 0;
  int replicate = 0;
  std::optional<double> beta_hat;  ///< "NA" in the file for failed fits
  double beta_limit = 0.0;
};

/// Long-format CSV: estimator,n0,replicate,beta_hat,beta_limit. One row per
/// sweep cell in (n0, replicate, estimator) order.
std::string emit_figure_data(const SweepResult& sweep,
                             const std::vector<std::string>& comments = {});
std::vector<FigureRow> read_figure_data(std::istream& in);

}  // namespace ponly
