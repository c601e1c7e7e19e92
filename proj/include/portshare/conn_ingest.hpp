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

#pragma once

#include <cstddef>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portshare/conn_record.hpp"

namespace portshare {

enum class LogFormat { automatic, tsv, jsonl };

/// Parses "auto", "tsv" or "jsonl"; anything else is a ConfigError.
LogFormat parse_log_format(std::string_view name);

/// Pull-based reader over a Zeek conn log. Records come back in file order.
/// Malformed lines are counted in skipped() and never abort the stream.
class ConnLogReader {
public:
    ConnLogReader(std::istream& in, LogFormat format = LogFormat::automatic);

    std::optional<ConnRecord> next();

    std::size_t skipped() const { return skipped_; }
    std::size_t line_number() const { return line_no_; }
    LogFormat format() const { return format_; }

private:
    bool detect_format();
    std::optional<ConnRecord> parse_tsv(const std::string& line);
    std::optional<ConnRecord> parse_jsonl(const std::string& line);
    void read_header(const std::string& line);

    std::istream& in_;
    LogFormat format_;
    bool detected_ = false;
    std::string pending_;
    bool has_pending_ = false;
    std::size_t skipped_ = 0;
    std::size_t line_no_ = 0;

    // TSV header state.
    char separator_ = '\t';
    std::string unset_field_ = "-";
    std::string empty_field_ = "(empty)";
    std::vector<int> column_of_;  // field id -> column index, -1 when missing
};

struct ParsedLog {
    std::vector<ConnRecord> records;
    std::size_t skipped = 0;
};

ParsedLog read_conn_log(std::istream& in, LogFormat format = LogFormat::automatic);
ParsedLog read_conn_log_file(const std::string& path, LogFormat format = LogFormat::automatic);

/// Zeek TSV with #separator/#fields/#types headers. Numbers use the shortest
/// representation that parses back to the same value.
void write_conn_log_tsv(std::ostream& out, std::span<const ConnRecord> records);
void write_conn_log_tsv_file(const std::string& path, std::span<const ConnRecord> records);

/// One JSON object per line with Zeek field names; absent values are omitted.
void write_conn_log_jsonl(std::ostream& out, std::span<const ConnRecord> records);

}  // namespace portshare
