/*
 * Copyright (C) 2026 The sadprof Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SADPROF_SADPROF_HPP_
#define SADPROF_SADPROF_HPP_

#include "sadprof/call_graph.hpp"
#include "sadprof/catalog.hpp"
#include "sadprof/error.hpp"
#include "sadprof/evaluation.hpp"
#include "sadprof/forest.hpp"
#include "sadprof/random.hpp"
#include "sadprof/sad_profile.hpp"
#include "sadprof/synth.hpp"
#include "sadprof/text.hpp"
#include "sadprof/trace.hpp"

#endif  // SADPROF_SADPROF_HPP_
