// Copyright 2026 The attnscene Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "attnscene/core.hpp"
#include "attnscene/audio_scene.hpp"
#include "attnscene/audio_io.hpp"
#include "attnscene/speaker_space.hpp"
#include "attnscene/neural_sim.hpp"
#include "attnscene/separation.hpp"
#include "attnscene/bilstm.hpp"
#include "attnscene/attention_decoder.hpp"
#include "attnscene/text_metrics.hpp"
#include "attnscene/prompt.hpp"
#include "attnscene/http_backend.hpp"
#include "attnscene/config.hpp"
#include "attnscene/dataset.hpp"
#include "attnscene/experiment.hpp"
