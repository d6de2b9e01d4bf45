#pragma once

#include <filesystem>
#include <string>

#include "tmboot/ntm.hpp"
#include "tmboot/tm.hpp"

namespace tmboot {

// Binary container, all integers little-endian:
//   "tm-model-v1\n"  variant tag ("tm" | "ntm")  config hash  vocab hash
//   hyperparameters  class / sub-intent names  per-clause weight + states
// Doubles are stored as their IEEE-754 bit pattern, so round trips are exact.

std::string serialize(const TMModel& model);
std::string serialize(const NTMModel& model);
TMModel deserialize_tm(std::string_view bytes);
NTMModel deserialize_ntm(std::string_view bytes);

void save_model(const std::filesystem::path& path, const TMModel& model);
void save_model(const std::filesystem::path& path, const NTMModel& model);
TMModel load_tm_model(const std::filesystem::path& path);
NTMModel load_ntm_model(const std::filesystem::path& path);

/// Variant tag of a serialized model file ("tm" or "ntm").
std::string model_variant(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tmboot
