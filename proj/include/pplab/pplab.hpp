/* Copyright 2026 The pplab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include "pplab/corpus/chat.hpp"
#include "pplab/corpus/corpus.hpp"
#include "pplab/corpus/preprocess.hpp"
#include "pplab/corpus/vocabulary.hpp"
#include "pplab/csv.hpp"
#include "pplab/error.hpp"
#include "pplab/eval/loocv.hpp"
#include "pplab/eval/metrics.hpp"
#include "pplab/eval/report.hpp"
#include "pplab/interrogation/curve.hpp"
#include "pplab/interrogation/interpolate.hpp"
#include "pplab/interrogation/variants.hpp"
#include "pplab/lexstats/lexicon.hpp"
#include "pplab/lexstats/ols.hpp"
#include "pplab/lexstats/regression.hpp"
#include "pplab/lexstats/spearman.hpp"
#include "pplab/lm/checkpoint.hpp"
#include "pplab/lm/config.hpp"
#include "pplab/lm/embeddings.hpp"
#include "pplab/lm/gradient_check.hpp"
#include "pplab/lm/lstm.hpp"
#include "pplab/lm/parameters.hpp"
#include "pplab/lm/perplexity.hpp"
#include "pplab/lm/train.hpp"
#include "pplab/random.hpp"

namespace pplab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pplab
