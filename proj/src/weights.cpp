/*
 * Copyright 2026 The portshare Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "portshare/weights.hpp"

#include <cmath>
#include <fstream>

#include "portshare/errors.hpp"
#include "portshare/text.hpp"

namespace portshare {

void validate_weights(const std::array<double, kNumFeatures>& values)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        const double v = values[i];
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("weight for " + std::string(kFeatureNames[i]) +
                                  " must be finite and non-negative");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > WeightVector::kSumTolerance) {
        throw ValidationError("weights sum to " + text::format_double(sum) + ", expected 1");
    }
}

WeightVector WeightVector::uniform()
{
    WeightVector w;
    w.w_.fill(1.0 / static_cast<double>(kNumFeatures));
    return w;
}

WeightVector WeightVector::from_values(const std::array<double, kNumFeatures>& values)
{
    validate_weights(values);
    WeightVector w;
    w.w_ = values;
    return w;
}

WeightVector WeightVector::normalized(const std::array<double, kNumFeatures>& values)
{
    double sum = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("cannot normalize negative or non-finite weights");
        sum += v;
    }
    if (!(sum > 0.0)) throw ValidationError("cannot normalize weights with zero total");
    WeightVector w;
    for (std::size_t i = 0; i < kNumFeatures; ++i) w.w_[i] = values[i] / sum;
    return w;
}

WeightVector WeightVector::from_named(const std::map<std::string, double, std::less<>>& named)
{
    std::array<double, kNumFeatures> values{};
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        auto it = named.find(kFeatureNames[i]);
        if (it == named.end()) throw ValidationError("weights missing feature " + std::string(kFeatureNames[i]));
        values[i] = it->second;
    }
    if (named.size() != kNumFeatures) throw ValidationError("weights contain unknown features");
    return from_values(values);
}

std::size_t WeightVector::nonzero() const
{
    std::size_t n = 0;
    for (double v : w_) n += v > 0.0 ? 1 : 0;
    return n;
}

void write_weights_csv(std::ostream& out, const WeightVector& w)
{
    out << "feature,weight\n";
    for (std::size_t i = 0; i < kNumFeatures; ++i) {
        out << kFeatureNames[i] << ',' << text::format_double(w[i]) << '\n';
    }
    if (!out) throw IoError("write error on weights CSV");
}

void write_weights_csv_file(const std::string& path, const WeightVector& w)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write weights CSV: " + path);
    write_weights_csv(out, w);
}

WeightVector read_weights_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != "feature,weight") {
        throw ValidationError("weights CSV: expected header feature,weight");
    }
    std::map<std::string, double, std::less<>> named;
    while (std::getline(in, line)) {
        auto t = text::trim(line);
        if (t.empty()) continue;
        auto cols = text::split(t, ',');
        if (cols.size() != 2) throw ValidationError("weights CSV: expected two columns");
        auto v = text::parse_double(cols[1]);
        if (!v) throw ValidationError("weights CSV: bad weight for " + std::string(cols[0]));
        if (!named.emplace(std::string(cols[0]), *v).second) {
            throw ValidationError("weights CSV: duplicate feature " + std::string(cols[0]));
        }
    }
    return WeightVector::from_named(named);
}

WeightVector read_weights_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open weights CSV: " + path);
    return read_weights_csv(in);
}

}  // namespace portshare
