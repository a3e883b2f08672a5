/*
 * Copyright 2026 The Synapse Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYNAPSE_SYNAPSE_HPP_
#define SYNAPSE_SYNAPSE_HPP_

#include "synapse/cam.hpp"
#include "synapse/cfg.hpp"
#include "synapse/config.hpp"
#include "synapse/core.hpp"
#include "synapse/elu.hpp"
#include "synapse/engine.hpp"
#include "synapse/errors.hpp"
#include "synapse/experiments.hpp"
#include "synapse/hash.hpp"
#include "synapse/interconnect.hpp"
#include "synapse/metrics.hpp"
#include "synapse/optimizer.hpp"
#include "synapse/pmu.hpp"
#include "synapse/rng.hpp"
#include "synapse/rules.hpp"
#include "synapse/traffic.hpp"
#include "synapse/trie.hpp"
#include "synapse/usl.hpp"
#include "synapse/vmt.hpp"

#endif // SYNAPSE_SYNAPSE_HPP_
