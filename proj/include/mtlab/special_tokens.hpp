#pragma once

namespace mtlab {

// Reserved ids shared by the vocabulary, the model and the decoder.
inline constexpr int kPadId = 0;
inline constexpr int kBosId = 1;
inline constexpr int kEosId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumSpecials = 4;

}  // namespace mtlab
