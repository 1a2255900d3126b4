// Copyright 2026 The modecompose Authors.
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

#ifndef MODECOMPOSE_IMAGE_IO_H_
#define MODECOMPOSE_IMAGE_IO_H_

#include <filesystem>

#include "modecompose/types.h"

namespace modecompose {

// Writes flattened RGB images (rows of `images`, channels last, values in
// [-1, 1]) as a near-square PNG grid with a 1-pixel gap.
void WriteImageGrid(const std::filesystem::path& path, const Matrix& images, int resolution,
                    int columns = 0);

// Reads an 8-bit RGB PNG into a flattened [-1, 1] vector; returns the width
// and height through the out-parameters.
Vector ReadPngRgb(const std::filesystem::path& path, int* width, int* height);

}  // namespace modecompose

#endif  // MODECOMPOSE_IMAGE_IO_H_
