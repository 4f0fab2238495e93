#pragma once

#include <string>

#include "medpipe/pipeline.hpp"

namespace medpipe {

// Versioned binary model container. Layout:
//   magic "TPM1" | u32 version | u32 stage count |
//   stages { u32 id, u64 length, payload } in fixed id order |
//   u32 CRC32 over everything after the magic.
// Stage ids: 1 scaling, 2 selection, 3 pca, 4 lda, 5 svm. Scaling and svm
// are mandatory; reals are little-endian 64-bit.
void save_model(const std::string& path, const PipelineModel& model);
PipelineModel load_model(const std::string& path);

std::uint32_t crc32_ieee(const void* data, std::size_t len);

}  // namespace medpipe
