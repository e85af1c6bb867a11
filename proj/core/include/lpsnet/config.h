// Copyright 2026 The lpsnet Authors
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

// The library is built once per floating-point precision. Each build lives in
// its own inline namespace so both can be linked into one program.
#ifdef LPSNET_REAL_DOUBLE
#define LPSNET_ABI_NAMESPACE f64
#else
#define LPSNET_ABI_NAMESPACE f32
#endif
