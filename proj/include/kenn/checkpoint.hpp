#pragma once

#include <filesystem>
#include <string>

#include "kenn/enhancer.hpp"

namespace kenn {

// Layout: 8-byte magic "KENNCKPT", u64 little-endian header length, UTF-8 JSON
// header (catalog, model shape, clause list, parameter table with byte
// offsets), then every parameter as little-endian float64 in header order.
std::string encode_checkpoint(const KennModel& model);
KennModel decode_checkpoint(const std::string& bytes);

void save_checkpoint(const KennModel& model, const std::filesystem::path& path);
KennModel load_checkpoint(const std::filesystem::path& path);

}  // namespace kenn
