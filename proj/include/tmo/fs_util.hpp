// Copyright 2026 The TMO Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TMO_FS_UTIL_HPP_
#define TMO_FS_UTIL_HPP_

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>

namespace tmo {

/// Sibling path used for write-then-rename.
std::filesystem::path temp_sibling(const std::filesystem::path& target);

/// Writes through `fill` into a temporary sibling, then renames it over
/// `target`. The temporary is removed if `fill` throws.
void atomic_write(const std::filesystem::path& target,
                  const std::function<void(std::ostream&)>& fill, bool binary = true);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tmo

#endif  // TMO_FS_UTIL_HPP_
