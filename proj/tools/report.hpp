#pragma once

// JSON/CSV renderings of module results, and atomic file output.

#include <string>

#include <json.hpp>

#include "maslov/evans.hpp"
#include "maslov/maslov.hpp"
#include "maslov/pulse.hpp"
#include "maslov/spectral.hpp"

namespace maslov::cli {

nlohmann::json to_json(const HypothesisReport& r);
nlohmann::json to_json(const Crossing& c);
nlohmann::json to_json(const SpectrumReport& r);
nlohmann::json to_json(const MaslovReport& r);
nlohmann::json to_json(const EvansTrace& t);
nlohmann::json to_json(const SymmetryResult& s);
nlohmann::json to_json(const InstabilityVerdict& v);

std::string trace_csv(const PropagationTrace& t);
std::string sweep_csv(const MaslovReport& r);
std::string spectrum_csv(const SpectrumReport& r);

/// Writes via a temporary file in the same directory and renames over the target.
void write_atomic(const std::string& path, const std::string& content);

/// Stable text form: 2-space indent, trailing newline.
std::string dump(const nlohmann::json& j);

}  // namespace maslov::cli
