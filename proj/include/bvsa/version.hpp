#pragma once

namespace bvsa {

inline constexpr const char* kArtifactName = "bvsa";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Format tags embedded in files this artifact writes. Bump on layout changes.
inline constexpr const char* kSummaryFormat = "bvsa-summary/1";
inline constexpr const char* kDrawsFormat = "bvsa-draws/1";

}  // namespace bvsa
