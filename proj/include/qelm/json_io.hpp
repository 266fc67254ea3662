#pragma once

#include <json.hpp>

#include "qelm/embedding.hpp"
#include "qelm/ml.hpp"
#include "qelm/mps.hpp"
#include "qelm/rydberg.hpp"
#include "qelm/tdvp.hpp"

namespace qelm {

using json = nlohmann::json;

void to_json(json& j, const ChainSpec& s);
void from_json(const json& j, ChainSpec& s);

void to_json(json& j, const KrylovOptions& k);
void from_json(const json& j, KrylovOptions& k);

void to_json(json& j, const EvolutionConfig& c);
void from_json(const json& j, EvolutionConfig& c);

void to_json(json& j, const TrainConfig& c);
void from_json(const json& j, TrainConfig& c);

void to_json(json& j, const ClassifierModel& m);
void from_json(const json& j, ClassifierModel& m);

void to_json(json& j, const PcaModel& m);
void from_json(const json& j, PcaModel& m);

void to_json(json& j, const ScalerModel& m);
void from_json(const json& j, ScalerModel& m);

/// Site tensors as {shape, re, im} in row-major order.
json mps_to_json(const MpsState& state);
MpsState mps_from_json(const json& j);

json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

json read_json_file(const std::string& path);
/// Pretty-printed, newline-terminated.
void write_json_file(const std::string& path, const json& j);

}  // namespace qelm
