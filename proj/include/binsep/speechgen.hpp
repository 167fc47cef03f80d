// Copyright 2026 The binsep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>

#include "binsep/types.hpp"

namespace binsep {

/// Seeded speech-like test signal: AM syllable bursts of a drifting harmonic
/// voice with formant coloring, interleaved with band-limited noise bursts.
/// Unit RMS over the whole utterance.
Waveform synth_utterance(double sample_rate_hz, double duration_s, uint64_t seed);

}  // namespace binsep
