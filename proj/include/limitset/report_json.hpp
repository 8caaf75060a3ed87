#pragma once

// JSON encodings of regions, parameters and reports.

#include <json.hpp>

#include "limitset/certify.hpp"
#include "limitset/invariance.hpp"
#include "limitset/odeint.hpp"
#include "limitset/omega.hpp"
#include "limitset/regions.hpp"

namespace limitset {

using json = nlohmann::ordered_json;

/// Error in a JSON document; `path` names the offending field ("regions.axis.g").
class SpecError : public std::runtime_error {
public:
    SpecError(const std::string& path, const std::string& message);
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

json to_json(const State& x);
json to_json(const std::vector<State>& xs);
json to_json(const Box& box);
json to_json(const Region& region);
json to_json(const IntegratorConfig& cfg);
json to_json(const OmegaParams& p);
json to_json(const OmegaEstimate& est);
json to_json(const InvarianceReport& rep);
json to_json(const SampleCloud& cloud);
json to_json(const Theorem1Report& rep);
json to_json(const Theorem2Report& rep);
json to_json(const LieSignal& sig);
json to_json(const SweepSummary& s);

Box box_from_json(const json& j, int dimension, const std::string& path);

/// {"kind":"zero_set","g":"x2","tol":1e-6,"box":[[-10,10],[-10,10]],"clip":false}
/// and analogous for "sublevel", "point_set" ("points") and "whole_space".
/// `fallback_box` is used for implicit kinds that carry no box of their own.
Region region_from_json(const json& j, int dimension, const std::string& path, const Box& fallback_box = {});

/// Applies the keys present in `j` on top of `base`.
IntegratorConfig integrator_from_json(const json& j, IntegratorConfig base, const std::string& path);

}  // namespace limitset
