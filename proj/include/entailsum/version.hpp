// Copyright 2026 The EntailSum Authors.
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

namespace entailsum {

inline constexpr const char* kToolVersion = "1.0.0";

// Identity of the seeded sampling procedure recorded in curation manifests.
// Bump the suffix if the algorithm or its seeding scheme ever changes.
inline constexpr const char* kRandomGeneratorId = "mt19937_64-fisher-yates/v1";

}  // namespace entailsum
