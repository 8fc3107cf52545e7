#ifndef RERAND_IO_HPP
#define RERAND_IO_HPP

#include <string>
#include <vector>

#include "rerand/common.hpp"
#include "rerand/design_space.hpp"
#include "rerand/optimizer.hpp"

namespace rerand {

struct CovariateTable {
  Matrix raw;           // empty when loaded from an artifact
  Matrix standardized;  // columns centered (mean 0) and scaled (sample SD 1)
  std::vector<std::string> column_names;
};

/// Centers and scales each column; rejects constant columns by name.
CovariateTable standardize_covariates(const Matrix& raw,
                                      std::vector<std::string> names);

/// Reads a delimited numeric file (comma, semicolon, tab or whitespace);
/// errors carry 1-based (row, column) locations. Odd row counts are rejected
/// since forced balance needs an even n.
CovariateTable ingest_covariates(const std::string& path, bool has_header);

/// One-column numeric file (responses).
Vector load_vector(const std::string& path);

/// Single '+'/'-' line file (the realized assignment).
Vector load_assignment_file(const std::string& path);

/// Pool text format: header "n=<n> S=<S> seed=<seed>", one '+'/'-' line per
/// assignment.
void save_pool(const AssignmentPool& pool, const std::string& path);
AssignmentPool load_pool(const std::string& path);

/// Versioned on-disk design: config echo, covariates, result, W* in the
/// '+'/'-' line encoding. Round-trips losslessly apart from created_at.
struct DesignArtifact {
  int schema_version = 1;
  std::string created_at;  // ISO-8601 UTC
  CovariateTable covariates;
  DesignResult result;
};

std::string design_to_json(const DesignArtifact& artifact);
DesignArtifact design_from_json(const std::string& text);

void save_design(const DesignArtifact& artifact, const std::string& path);
DesignArtifact load_design(const std::string& path);

/// Structural invariant checks on a loaded artifact; recomputes imbalances
/// and moment identities when covariates are present. Returns human-readable
/// findings; throws validation_error on a hard violation.
std::vector<std::string> validate_design(const DesignArtifact& artifact);

std::string iso_utc_now();

}  // namespace rerand

#endif  // RERAND_IO_HPP
