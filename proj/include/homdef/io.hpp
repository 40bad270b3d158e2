#ifndef HOMDEF_IO_HPP
#define HOMDEF_IO_HPP

#include "homdef/study.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace homdef {

/// Round-trip formatting (%.17g).
std::string format_double(double value);

/// Writes text, creating parent directories. Throws Error on I/O failure.
void write_text(const std::string& path, const std::string& content);
void write_json(const std::string& path, const nlohmann::json& doc);

nlohmann::json mesh_summary(const DomainMesh& mesh);
nlohmann::json mesh_summary(const UnitCellGrid& grid);

/// Coordinate format, general real, 1-based indices.
std::string matrix_market(const CsrMatrix& matrix);

/// One row per master node: y_1..y_d, then v[g][b][j] columns.
std::string correctors_csv(const CorrectorSet& correctors);

nlohmann::json homogenized_json(const HomogenizedTensor& ahat);

/// Nodal table: coordinates, u0, u_bar, difference (and u_eps when given).
std::string solution_csv(const DiscreteField& u0, const DiscreteField& u_bar,
                         const std::optional<DiscreteField>& u_eps = std::nullopt);

nlohmann::json frozen_report_json(const FrozenNewtonReport& report);
nlohmann::json newton_result_json(const NewtonResult& result);
nlohmann::json probe_report_json(const ProbeReport& report);
nlohmann::json fit_json(const std::optional<LogLogFit>& fit, const FitWindow& window);

/// Columns eps, err_sup, resid_dual, q_max, iters, status, rho_hat, h1_distance, bound;
/// a trailing row "fit,<slope>,<r_squared>,,<points>,fitted" holds the log-log fit.
std::string rate_csv(const RateStudyResult& result);
nlohmann::json rate_json(const RateStudyResult& result);

std::string decay_csv(const DecayResult& result, const std::string& column);
nlohmann::json decay_json(const DecayResult& result);

/// Static log-log plot of (eps, value) with the fitted line when present.
std::string loglog_svg(const std::vector<double>& eps, const std::vector<double>& values,
                       const std::optional<LogLogFit>& fit, const std::string& title,
                       const std::string& ylabel);

}  // namespace homdef

#endif  // HOMDEF_IO_HPP
