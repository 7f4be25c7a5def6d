// Copyright 2026 The AAPR Authors.
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

#include "aapr/autodiff.hpp"
#include "aapr/corpus.hpp"
#include "aapr/error.hpp"
#include "aapr/gradcheck.hpp"
#include "aapr/latex.hpp"
#include "aapr/manifest.hpp"
#include "aapr/model.hpp"
#include "aapr/optim.hpp"
#include "aapr/params.hpp"
#include "aapr/rng.hpp"
#include "aapr/text.hpp"
#include "aapr/training.hpp"
#include "aapr/vocab.hpp"
