#include "sada/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace sada {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<AugmentKind> parse_plan(const std::string& value) {
    std::vector<AugmentKind> kinds;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) kinds.push_back(augment_kind_from_name(item));
    }
    return kinds;
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

}  // namespace

HarnessConfig parse_config_text(const std::string& text) {
    HarnessConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        TrainConfig& t = cfg.train;
        DatasetSpec& d = cfg.data;
        if (key == "alpha") t.alpha = std::stod(value);
        else if (key == "sigma") t.sigma = std::stod(value);
        else if (key == "tau") t.tau = std::stod(value);
        else if (key == "lr_main") t.lr_main = std::stod(value);
        else if (key == "lr_emd") t.lr_emd = std::stod(value);
        else if (key == "epochs") t.epochs = std::stoi(value);
        else if (key == "image_batch") t.image_batch = std::stoi(value);
        else if (key == "prompt_batch") t.prompt_batch = std::stoi(value);
        else if (key == "J") t.J = std::stoi(value);
        else if (key == "L") t.L = std::stoi(value);
        else if (key == "M") t.M = std::stoi(value);
        else if (key == "H") t.dims.H = std::stoi(value);
        else if (key == "W") t.dims.W = std::stoi(value);
        else if (key == "C") t.dims.C = std::stoi(value);
        else if (key == "E") t.dims.E = std::stoi(value);
        else if (key == "D") t.dims.D = std::stoi(value);
        else if (key == "blocks") t.dims.blocks = std::stoi(value);
        else if (key == "seed") t.seed = std::stoull(value);
        else if (key == "encoder_seed") t.encoder_seed = std::stoull(value);
        else if (key == "sa_position") t.sa_position = std::stoi(value);
        else if (key == "token_position") t.token_position = token_position_from_name(value);
        else if (key == "inference_mode") t.inference_mode = inference_mode_from_name(value);
        else if (key == "loss_kind") t.loss_kind = loss_kind_from_name(value);
        else if (key == "prototype_source") t.prototype_source = prototype_source_from_name(value);
        else if (key == "enable_sa") t.enable_sa = parse_bool(value, key);
        else if (key == "enable_cmda") t.enable_cmda = parse_bool(value, key);
        else if (key == "augment_images") t.augment_images = parse_bool(value, key);
        else if (key == "lang_stats_per_group") t.lang_stats_per_group = parse_bool(value, key);
        else if (key == "plan") t.plan_kinds = parse_plan(value);
        else if (key == "K") d.num_classes = std::stoi(value);
        else if (key == "shots") d.shots = std::stoi(value);
        else if (key == "n_test_per_class") d.n_test_per_class = std::stoi(value);
        else if (key == "pool_per_class") d.pool_per_class = std::stoi(value);
        else if (key == "data_seed") d.seed = std::stoull(value);
        else if (key == "runs") cfg.runs = std::stoi(value);
        else throw ConfigError("unknown config key: " + key);
    }
    cfg.sync();
    return cfg;
}

HarnessConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_to_text(const HarnessConfig& cfg) {
    const TrainConfig& t = cfg.train;
    const DatasetSpec& d = cfg.data;
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << "alpha = " << t.alpha << "\nsigma = " << t.sigma << "\ntau = " << t.tau
        << "\nlr_main = " << t.lr_main << "\nlr_emd = " << t.lr_emd << "\nepochs = " << t.epochs
        << "\nimage_batch = " << t.image_batch << "\nprompt_batch = " << t.prompt_batch
        << "\nJ = " << t.J << "\nL = " << t.L << "\nM = " << t.M << "\nH = " << t.dims.H
        << "\nW = " << t.dims.W << "\nC = " << t.dims.C << "\nE = " << t.dims.E
        << "\nD = " << t.dims.D << "\nblocks = " << t.dims.blocks << "\nseed = " << t.seed
        << "\nencoder_seed = " << t.encoder_seed << "\nsa_position = " << t.sa_position
        << "\ntoken_position = " << token_position_name(t.token_position)
        << "\ninference_mode = " << inference_mode_name(t.inference_mode)
        << "\nloss_kind = " << loss_kind_name(t.loss_kind)
        << "\nprototype_source = " << prototype_source_name(t.prototype_source)
        << "\nenable_sa = " << (t.enable_sa ? "true" : "false")
        << "\nenable_cmda = " << (t.enable_cmda ? "true" : "false")
        << "\naugment_images = " << (t.augment_images ? "true" : "false")
        << "\nlang_stats_per_group = " << (t.lang_stats_per_group ? "true" : "false");
    out << "\nplan = ";
    for (std::size_t i = 0; i < t.plan_kinds.size(); ++i) {
        if (i) out << ",";
        out << augment_kind_name(t.plan_kinds[i]);
    }
    out << "\nK = " << d.num_classes << "\nshots = " << d.shots
        << "\nn_test_per_class = " << d.n_test_per_class
        << "\npool_per_class = " << d.pool_per_class << "\ndata_seed = " << d.seed
        << "\nruns = " << cfg.runs << "\n";
    return out.str();
}

std::string config_digest(const HarnessConfig& config) {
    const std::string text = config_to_text(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// ---------------------------------------------------------------- CSV

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : file_(nullptr), columns_(header.size()) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot open " + path + " for writing");
    file_ = f;
    row(header);
}

CsvWriter::~CsvWriter() {
    if (file_) std::fclose(static_cast<FILE*>(file_));
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw IoError("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(columns_));
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ",";
        line += cells[i];
    }
    line += "\n";
    std::fwrite(line.data(), 1, line.size(), static_cast<FILE*>(file_));
}

std::string CsvWriter::num(double value) {
    std::ostringstream out;
    out.precision(std::numeric_limits<double>::max_digits10);
    out << value;
    return out.str();
}

// ---------------------------------------------------------------- images

void write_pgm(const std::string& path, const std::vector<double>& values, int h, int w) {
    if (static_cast<std::size_t>(h) * w != values.size())
        throw IoError("pgm: value count does not match dimensions");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P2\n" << w << " " << h << "\n255\n";
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(values[static_cast<std::size_t>(y) * w + x], 0.0, 1.0);
            out << static_cast<int>(std::lround(v * 255.0));
            out << (x + 1 == w ? '\n' : ' ');
        }
    }
}

// ---------------------------------------------------------------- checkpoints

void save_checkpoint(const std::string& path, const TrainedState& state,
                     const HarnessConfig& harness) {
    json j;
    j["format_version"] = 1;
    j["config_text"] = config_to_text(harness);
    j["num_classes"] = state.num_classes;
    j["prompts"] = state.prompts.values;
    json adapters = json::array();
    for (const auto& a : state.adapters) {
        json entry;
        entry["conv7"] = a.conv7.values;
        entry["conv3"] = a.conv3.values;
        adapters.push_back(std::move(entry));
    }
    j["adapters"] = std::move(adapters);
    j["bank"] = {{"initialized", state.bank.initialized()},
                 {"shots", state.bank.shots()},
                 {"values", state.bank.raw()}};
    j["align_bound_at_init"] = state.align_bound_at_init;
    json log = json::array();
    for (const auto& m : state.log)
        log.push_back({{"epoch", m.epoch},
                       {"loss_main", m.loss_main},
                       {"loss_align", m.loss_align},
                       {"train_acc", m.train_acc},
                       {"val_acc", m.val_acc}});
    j["log"] = std::move(log);

    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint " + path);
    json j;
    in >> j;
    if (j.at("format_version").get<int>() != 1)
        throw IoError("unsupported checkpoint version");

    Checkpoint cp;
    cp.harness = parse_config_text(j.at("config_text").get<std::string>());
    const TrainConfig& cfg = cp.harness.train;
    TrainedState& st = cp.state;
    st.config = cfg;
    st.num_classes = j.at("num_classes").get<int>();
    st.encoders = build_encoders(cfg.encoder_seed, cfg.dims, st.num_classes, cfg.M);
    st.plan = cfg.plan_kinds.empty() ? plan_for_group_count(cfg.J) : make_plan(cfg.plan_kinds);

    Rng dummy(0);
    st.prompts = PromptCollection::init(cfg.J, cfg.L, cfg.M, cfg.dims.E, cfg.token_position, dummy);
    const auto prompt_values = j.at("prompts").get<std::vector<double>>();
    if (prompt_values.size() != st.prompts.values.size())
        throw IoError("checkpoint prompt size mismatch");
    st.prompts.values = prompt_values;

    for (const auto& entry : j.at("adapters")) {
        AdapterGroup a;
        const int channels = st.encoders.image.channels_at(cfg.sa_position);
        a.conv7 = Tensor({7, 7, channels, kAttentionChannels},
                         entry.at("conv7").get<std::vector<double>>());
        a.conv3 = Tensor({3, 3, 2, 1}, entry.at("conv3").get<std::vector<double>>());
        st.adapters.push_back(std::move(a));
    }

    const auto& bank = j.at("bank");
    if (bank.at("initialized").get<bool>()) {
        st.bank = VlpBank(bank.at("shots").get<int>(), cfg.J, st.num_classes, cfg.dims.D);
        st.bank.restore(bank.at("shots").get<int>(), cfg.J, st.num_classes, cfg.dims.D,
                        bank.at("values").get<std::vector<double>>(), true);
    }
    st.align_bound_at_init = j.at("align_bound_at_init").get<double>();
    for (const auto& m : j.at("log")) {
        EpochMetrics em;
        em.epoch = m.at("epoch").get<int>();
        em.loss_main = m.at("loss_main").get<double>();
        em.loss_align = m.at("loss_align").get<double>();
        em.train_acc = m.at("train_acc").get<double>();
        em.val_acc = m.at("val_acc").get<double>();
        st.log.push_back(em);
    }
    return cp;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& log) {
    CsvWriter csv(path, {"epoch", "loss_main", "loss_align", "train_acc", "val_acc"});
    for (const auto& m : log)
        csv.row({CsvWriter::num(m.epoch), CsvWriter::num(m.loss_main),
                 CsvWriter::num(m.loss_align), CsvWriter::num(m.train_acc),
                 CsvWriter::num(m.val_acc)});
}

}  // namespace sada
