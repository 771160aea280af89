/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#pragma once

#include <cstddef>
#include <functional>

namespace kmix {

// Worker count: KMIX_THREADS if set and positive, else hardware concurrency.
unsigned thread_count();

// Runs body(chunk) for chunk in [0, n_chunks) on a transient pool of threads.
// Chunks are claimed dynamically; body must not depend on which thread runs it.
void parallel_for(std::size_t n_chunks, const std::function<void(std::size_t)>& body);

}  // namespace kmix
