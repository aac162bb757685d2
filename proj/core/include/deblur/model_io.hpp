#pragma once

#include <string>

#include "deblur/pipeline.hpp"

namespace deblur {

// Model container (.dbm): "DBMF" magic, little-endian uint32 header length,
// JSON header (format_version, architecture shape, named tensor list), then
// all tensors as one contiguous little-endian float32 blob in declared order.
//
// Parameters are f64 in memory and f32 in the file; save→load→save is
// byte-identical (round trips are lossless at file precision).
void save_model(const MultiScaleModel& model, const std::string& path);

// Throws CorruptModelError (bad magic / truncation / unparsable header),
// ModelVersionError (foreign format_version, message names both versions) or
// ModelInvariantError (structure or finiteness violations).
MultiScaleModel load_model(const std::string& path);

constexpr int kModelFormatVersion = 1;

}  // namespace deblur
