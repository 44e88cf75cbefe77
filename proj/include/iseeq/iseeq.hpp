// Copyright 2026 The iseeq Authors
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

#include "iseeq/config.hpp"
#include "iseeq/embed_io.hpp"
#include "iseeq/error.hpp"
#include "iseeq/eval_metrics.hpp"
#include "iseeq/formats.hpp"
#include "iseeq/kg_store.hpp"
#include "iseeq/kpr.hpp"
#include "iseeq/losses.hpp"
#include "iseeq/sitq_index.hpp"
#include "iseeq/sqe.hpp"
#include "iseeq/text.hpp"
#include "iseeq/transport.hpp"
#include "iseeq/wmd.hpp"
