/*
 * Copyright 2026 The PPOD Authors
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
#pragma once

#include "ppod/classifier.hpp"
#include "ppod/data_model.hpp"
#include "ppod/dataset.hpp"
#include "ppod/dp_core.hpp"
#include "ppod/errors.hpp"
#include "ppod/eval_harness.hpp"
#include "ppod/privacy_budget.hpp"
#include "ppod/protocol_sim.hpp"
