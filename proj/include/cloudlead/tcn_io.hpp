#pragma once

#include <filesystem>

#include "cloudlead/tcn.hpp"

namespace cloudlead::tcn {

// Versioned JSON checkpoint; parameters are written as nested decimal arrays
// with shortest-round-trip formatting, so load(save(m)) is value-exact.
void save_model(const TcnModel& model, const std::filesystem::path& path);
TcnModel load_model(const std::filesystem::path& path);

std::string train_log_csv(const TrainResult& result, bool with_timings);

}  // namespace cloudlead::tcn
