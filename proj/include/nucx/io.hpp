#pragma once

#include "nucx/allan.hpp"
#include "nucx/experiment.hpp"
#include "nucx/fit.hpp"
#include "nucx/motion.hpp"
#include "nucx/response.hpp"
#include "nucx/tls.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

// File formats: JSON for structured configs and results, CSV for event and
// time-series data (diff-able and stream-parsable).  Every schema carries a
// schema_version; readers reject missing fields with a message naming the
// field.

namespace nucx::io {

inline constexpr int schema_version = 1;
inline constexpr const char* tool_version = "1.0.0";

using nlohmann::json;

// ---- JSON schemas --------------------------------------------------------

json to_json(const response::TransmissionModel& model);
response::TransmissionModel transmission_from_json(const json& j);

json to_json(const motion::MotionProfile& profile);
motion::MotionProfile motion_from_json(const json& j);

json to_json(const experiment::ExperimentConfig& config);
experiment::ExperimentConfig config_from_json(const json& j);

json to_json(const fit::FitResult& result);
fit::FitResult fit_result_from_json(const json& j);

json to_json(const fit::NoiseFit& fit);

json to_json(const experiment::Spectrum2D& spectrum);
experiment::Spectrum2D spectrum_from_json(const json& j);

void save_json(const std::string& path, const json& j);
json load_json(const std::string& path);

// ---- CSV files -----------------------------------------------------------

// events: "t_ns,delta_gamma,lab_time_s" rows; dead-time windows are kept as
// "# dead <start_s> <duration_s>" comments so the file is self-contained
void save_events_csv(const std::string& path, const experiment::EventSet& data);
experiment::EventSet load_events_csv(const std::string& path);

void save_allan_csv(const std::string& path, const allan::AllanSeries& series);
void save_sliding_csv(const std::string& path, const std::vector<allan::SlidingPoint>& trace);
void save_dipole_csv(const std::string& path, const tls::DipoleTrace& trace);
void save_fit_trace_csv(const std::string& path, const std::vector<double>& best_by_generation);

// ---- manifests -----------------------------------------------------------

std::string fnv1a64_file(const std::string& path);

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs;  // (path, digest)
    std::vector<std::pair<std::string, std::string>> outputs; // (path, digest)
    double duration_s = 0.0;

    void add_input(const std::string& path);
    void add_output(const std::string& path);
};

void save_manifest(const std::string& path, const RunManifest& manifest);

} // namespace nucx::io
