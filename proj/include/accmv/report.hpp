#ifndef ACCMV_REPORT_HPP
#define ACCMV_REPORT_HPP

#include "accmv/analysis.hpp"
#include "accmv/mpm.hpp"
#include "accmv/sensitivity.hpp"
#include "accmv/simgen.hpp"
#include "accmv/study.hpp"

#include <json.hpp>

namespace accmv {

nlohmann::json to_json(const OddsModel& model, const Dataset& ds);
nlohmann::json to_json(const OutcomeModel& model, const Dataset& ds);
nlohmann::json to_json(const WeightTable& weights);
nlohmann::json to_json(const CiReport& ci);
nlohmann::json to_json(const Analysis& analysis, const Dataset& ds, double level);
nlohmann::json to_json(const MpmEstimate& est, double level);
nlohmann::json to_json(const SensitivityCurve& curve);
nlohmann::json to_json(const TableResult& table);
nlohmann::json to_json(const OracleReport& report);

}  // namespace accmv

#endif  // ACCMV_REPORT_HPP
