#pragma once

#include <string>
#include <vector>

#include "sada/dataset.hpp"
#include "sada/pipeline.hpp"

namespace sada {

// Experiment-level configuration: one training config plus the dataset and
// protocol settings around it. Mirrors the plain-text key=value config file.
struct HarnessConfig {
    TrainConfig train;
    DatasetSpec data;
    int runs = 10;

    void sync() {  // dataset geometry follows the encoder dims
        data.H = train.dims.H;
        data.W = train.dims.W;
        data.C = train.dims.C;
    }
};

// key = value lines, '#' comments; unknown keys are an error.
HarnessConfig parse_config_text(const std::string& text);
HarnessConfig load_config_file(const std::string& path);
std::string config_to_text(const HarnessConfig& config);

// FNV-1a over the canonical config text, hex string.
std::string config_digest(const HarnessConfig& config);

// ---------------------------------------------------------------- CSV

// Comma-separated, header row, UTF-8, LF line endings. Numbers print with
// max_digits10 so re-runs are byte-comparable.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void row(const std::vector<std::string>& cells);
    static std::string num(double value);
    static std::string num(int value) { return std::to_string(value); }

private:
    void* file_;  // FILE*
    std::size_t columns_;
};

// ---------------------------------------------------------------- images

// Portable graymap (P2); values clamped to [0, 1] and scaled to 0..255.
void write_pgm(const std::string& path, const std::vector<double>& values, int h, int w);

// ---------------------------------------------------------------- checkpoints

// Versioned JSON dump of everything needed to rebuild a trained state:
// config, class count, prompts, adapters, bank, metric log.
void save_checkpoint(const std::string& path, const TrainedState& state,
                     const HarnessConfig& harness);

struct Checkpoint {
    TrainedState state;
    HarnessConfig harness;
};
Checkpoint load_checkpoint(const std::string& path);

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& log);

}  // namespace sada
