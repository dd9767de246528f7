#pragma once

#include <string>

#include <json.hpp>

#include "cam/kde.hpp"
#include "cam/locreg.hpp"
#include "cam/resample.hpp"
#include "cam/simlab.hpp"
#include "cam/ustat.hpp"

namespace cam {

using Json = nlohmann::ordered_json;

constexpr int kJsonSchema = 1;

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Json to_json(const Summary& s);
Json to_json(const CamUStatResult& r);
Json to_json(const CamDensityResult& r);
Json to_json(const CamRegressionResult& r);
Json to_json(const BalancedAdjustment& b);
Json to_json(const ToyReport& r);
Json to_json(const UStatReport& r);
Json to_json(const ExperimentReport& r);
Json to_json(const HoldoutReport& r);

/// Two-space indented text with a trailing newline; doubles use the
/// shortest representation that round-trips.
std::string dump(const Json& j);

/// printf("%.17g") rendering used for CSV cells.
std::string format_double(double v);

}  // namespace cam
