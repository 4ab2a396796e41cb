// sdpost: command-line driver for the diarization post-processing pipeline.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sdpost/http_llm.hpp"
#include "sdpost/mock_scenarios.hpp"
#include "sdpost/sdpost.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2, kParse = 3 };

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw sdpost::InvalidArgument("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw sdpost::InvalidArgument("cannot write " + p.string());
    out << content;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Options shared by every subcommand that runs pipeline stages.
struct PipelineOptions {
    sdpost::PipelineConfig config;
    std::string llm_kind = "mock";
    std::string label_template_file;
    std::size_t jobs = 1;
    std::string trace_dir;
    std::string config_file;
    CLI::App* cmd = nullptr;
};

void add_pipeline_flags(CLI::App& cmd, PipelineOptions& o) {
    auto& c = o.config;
    o.cmd = &cmd;
    cmd.add_option("--config", o.config_file, "INI/TOML file with option defaults (flags override it)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--chunk-length", c.chunk_length, "diarization chunk length, seconds")->capture_default_str();
    cmd.add_option("--overlap", c.overlap, "overlap between chunks, seconds")->capture_default_str();
    cmd.add_option("--knn-k", c.knn_k, "neighbors retrieved for re-verification")->capture_default_str();
    cmd.add_option("--llm-threshold", c.llm_confidence_threshold, "LLM confidence gate")->capture_default_str();
    cmd.add_option("--levenshtein-threshold", c.levenshtein_threshold, "re-run similarity needed to keep orphan words")
        ->capture_default_str();
    cmd.add_option("--collar", c.collar, "DER collar, seconds")->capture_default_str();
    cmd.add_option("--orphan-gap", c.orphan_gap, "max gap inside one Unknown segment, seconds")->capture_default_str();
    cmd.add_option("--cluster-threshold", c.cluster_threshold, "cosine threshold for cross-chunk label merging")
        ->capture_default_str();
    cmd.add_option("--merge-max-gap", c.merge_max_gap, "max gap for merging same-identity segments, seconds")
        ->capture_default_str();
    cmd.add_flag("--safeguards", c.safeguards, "add identity-prompt safeguards");
    cmd.add_option("--backend-parallel", c.max_parallel, "concurrent backend calls per recording")
        ->capture_default_str();
    cmd.add_option("--context-before", c.context_before, "segments of context before a target")->capture_default_str();
    cmd.add_option("--context-after", c.context_after, "segments of context after a target")->capture_default_str();
    cmd.add_option("--label-word-budget", c.label_word_budget, "word budget of a labeling prompt")
        ->capture_default_str();
    cmd.add_option("--identity-word-budget", c.identity_word_budget, "word budget of the identity prompt")
        ->capture_default_str();
    cmd.add_option("--label-template", o.label_template_file, "segment labeling prompt template file");
    cmd.add_option("--llm", o.llm_kind, "language model backend")
        ->check(CLI::IsMember({"mock", "http"}))
        ->capture_default_str();
    cmd.add_option("--llm-endpoint", c.llm.endpoint, "chat-completions URL for --llm http");
    cmd.add_option("--llm-model", c.llm.model_name, "model name for --llm http");
    cmd.add_option("--llm-timeout", c.llm.timeout, "LLM request timeout, seconds")->capture_default_str();
    cmd.add_option("--llm-max-retries", c.llm.max_retries, "LLM retries after the first attempt")
        ->capture_default_str();
    cmd.add_option("--jobs", o.jobs, "recordings processed concurrently")->capture_default_str();
    cmd.add_option("--trace-dir", o.trace_dir, "write per-stage snapshots here");
}

// CLI11 only reads config files on the root app, so subcommands apply theirs here.
// Keys fill options the command line left unset.
void apply_config_file(CLI::App& cmd, const std::string& path) {
    for (const auto& item : CLI::ConfigTOML().from_file(path)) {
        if (item.name == "++" || item.name == "--") continue;
        if (!item.parents.empty()) throw sdpost::InvalidArgument(path + ": sections are not supported");
        auto* opt = cmd.get_option_no_throw("--" + item.name);
        if (opt == nullptr || item.name == "config") {
            throw sdpost::InvalidArgument(path + ": unknown key '" + item.name + "'");
        }
        if (opt->count() > 0) continue;
        opt->add_result(item.inputs);
        opt->run_callback();
    }
}

void finish_options(PipelineOptions& o) {
    if (!o.config_file.empty()) apply_config_file(*o.cmd, o.config_file);
    if (!o.label_template_file.empty()) o.config.label_prompt_template = read_file(o.label_template_file);
    if (const char* token = std::getenv("LLM_AUTH_TOKEN"); token && *token) o.config.llm.auth_token = token;
    if (o.jobs == 0) throw sdpost::InvalidArgument("--jobs must be >= 1");
    if (o.llm_kind == "http" && o.config.llm.endpoint.empty()) {
        throw sdpost::InvalidArgument("--llm http needs --llm-endpoint");
    }
    o.config.validate();
}

sdpost::Backends backends_for(const sdpost::mock::Script& script, const PipelineOptions& o) {
    auto b = sdpost::mock::make_backends(script);
    if (o.llm_kind == "http") b.llm = std::make_shared<sdpost::HttpChatClient>(o.config.llm);
    return b;
}

// ─── run ────────────────────────────────────────────────────────────────────

struct RunOptions {
    PipelineOptions pipe;
    std::vector<std::string> scripts;
    std::string out_dir = "out";
};

int run_one(const std::string& path, const RunOptions& o, std::mutex& log_mu) {
    const auto script = sdpost::mock::load_script(path);
    const std::string id = script.recording_id;
    const fs::path trace_root = o.pipe.trace_dir.empty() ? fs::path() : fs::path(o.pipe.trace_dir) / id;
    if (!trace_root.empty()) {
        fs::remove_all(trace_root);
        fs::create_directories(trace_root);
    }
    sdpost::TraceSink sink;
    if (!trace_root.empty()) {
        sink = [&](std::size_t index, const std::string& stage, const json& snap) {
            char name[64];
            std::snprintf(name, sizeof name, "%02zu_%s.json", index, stage.c_str());
            write_file(trace_root / name, dump(snap));
        };
    }
    try {
        const auto result = sdpost::run_pipeline(sdpost::mock::audio_ref(script, path), backends_for(script, o.pipe),
                                                 o.pipe.config, sink);
        const fs::path out(o.out_dir);
        write_file(out / (id + ".json"), dump(sdpost::output_json(id, result, o.pipe.config)));
        write_file(out / (id + ".rttm"), sdpost::output_rttm(id, result.segments));
        std::lock_guard lock(log_mu);
        std::cout << id << ": " << result.segments.size() << " segments, " << result.identity_map.distinct_identities().size()
                  << " identities -> " << (out / (id + ".json")).string() << "\n";
        return kOk;
    } catch (const sdpost::StageError& e) {
        if (!trace_root.empty()) {
            write_file(trace_root / "error.json", dump({{"stage", e.stage()}, {"error", e.what()},
                                                        {"completed_stages", e.trace().stages.size()}}));
        }
        std::lock_guard lock(log_mu);
        std::cerr << id << ": " << e.what() << "\n";
        return kFailure;
    }
}

int cmd_run(RunOptions& o) {
    finish_options(o.pipe);
    std::vector<int> codes(o.scripts.size(), kOk);
    std::mutex log_mu;
    sdpost::parallel_for(o.scripts.size(), o.pipe.jobs, [&](std::size_t i) {
        try {
            codes[i] = run_one(o.scripts[i], o, log_mu);
        } catch (const std::exception& e) {
            std::lock_guard lock(log_mu);
            std::cerr << o.scripts[i] << ": " << e.what() << "\n";
            codes[i] = kFailure;
        }
    });
    for (int c : codes)
        if (c != kOk) return c;
    return kOk;
}

// ─── score ──────────────────────────────────────────────────────────────────

struct ScoreOptions {
    std::string reference;
    std::vector<std::string> hypotheses;
    std::vector<std::string> reference_words;
    double collar = 0.25;
    std::string json_out;
};

struct Hypothesis {
    sdpost::Annotation annotation;
    std::optional<std::vector<std::string>> words;
};

// Pipeline output JSON: one recording, identity-labeled segments with words.
void read_pipeline_json(const json& doc, std::map<std::string, Hypothesis>& out) {
    Hypothesis h;
    std::vector<std::pair<double, std::string>> words;
    for (const auto& s : doc.at("segments")) {
        const double start = s.at("start").get<double>(), end = s.at("end").get<double>();
        if (end > start) h.annotation.add(start, end, s.at("identity").get<std::string>());
        if (s.contains("words"))
            for (const auto& w : s["words"]) words.emplace_back(w.at("start").get<double>(), w.at("text").get<std::string>());
    }
    std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    h.words.emplace();
    for (auto& [t, w] : words) h.words->push_back(std::move(w));
    out[doc.at("recording_id").get<std::string>()] = std::move(h);
}

// Word-timestamp JSON: [{"text","start","end"}...] or {"recording_id", "words": [...]}.
std::pair<std::string, std::vector<std::string>> read_words_json(const std::string& path) {
    const auto doc = json::parse(read_file(path));
    const json& arr = doc.is_object() ? doc.at("words") : doc;
    std::vector<std::pair<double, std::string>> ws;
    for (const auto& w : arr) ws.emplace_back(w.value("start", 0.0), w.at("text").get<std::string>());
    std::stable_sort(ws.begin(), ws.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (auto& [t, w] : ws) out.push_back(std::move(w));
    return {doc.is_object() ? doc.value("recording_id", std::string()) : std::string(), std::move(out)};
}

json report_json(const sdpost::DerReport& r) {
    json mapping = json::object();
    for (const auto& [h, ref] : r.mapping) mapping[h] = ref;
    return {{"der", r.der},
            {"false_alarm", r.false_alarm},
            {"confusion", r.confusion},
            {"missed", r.missed},
            {"total_reference", r.total_reference},
            {"false_alarm_time", r.false_alarm_time},
            {"confusion_time", r.confusion_time},
            {"missed_time", r.missed_time},
            {"mapping", std::move(mapping)}};
}

int cmd_score(const ScoreOptions& o) {
    const auto ref = sdpost::parse_rttm(read_file(o.reference), o.reference);
    std::map<std::string, Hypothesis> hyp;
    for (const auto& path : o.hypotheses) {
        const std::string text = read_file(path);
        const auto first = text.find_first_not_of(" \t\r\n");
        if (first != std::string::npos && text[first] == '{') {
            read_pipeline_json(json::parse(text), hyp);
        } else {
            for (auto& [file, ann] : sdpost::parse_rttm(text, path)) {
                auto& h = hyp[file].annotation;
                h.segments.insert(h.segments.end(), ann.segments.begin(), ann.segments.end());
            }
        }
    }
    std::map<std::string, std::vector<std::string>> ref_words;
    for (const auto& path : o.reference_words) {
        auto [id, words] = read_words_json(path);
        if (id.empty()) {
            if (ref.size() != 1) throw sdpost::InvalidArgument(path + " lacks recording_id and several files are scored");
            id = ref.begin()->first;
        }
        ref_words[id] = std::move(words);
    }

    std::vector<sdpost::ScoreRow> rows;
    std::vector<sdpost::DerReport> reports;
    json files = json::object();
    for (const auto& [file, ann] : ref) {
        const auto it = hyp.find(file);
        const sdpost::Annotation empty;
        sdpost::ScoreRow row{file, sdpost::der(ann, it == hyp.end() ? empty : it->second.annotation, o.collar), {}};
        if (auto w = ref_words.find(file); w != ref_words.end()) {
            if (it == hyp.end() || !it->second.words) {
                throw sdpost::InvalidArgument("reference transcript for " + file + " but hypothesis has no words");
            }
            row.wer = sdpost::wer(w->second, *it->second.words);
        }
        json jf = report_json(row.report);
        if (row.wer) jf["wer"] = *row.wer;
        files[file] = std::move(jf);
        reports.push_back(row.report);
        rows.push_back(std::move(row));
    }
    for (const auto& [file, h] : hyp)
        if (!ref.count(file)) std::cerr << "warning: hypothesis file '" << file << "' has no reference\n";

    json doc{{"collar", o.collar}, {"files", std::move(files)}};
    if (!reports.empty()) {
        const auto micro = sdpost::aggregate_micro(reports);
        const auto macro = sdpost::aggregate_macro(reports);
        rows.push_back({"micro", micro, {}});
        rows.push_back({"macro", macro, {}});
        doc["micro"] = report_json(micro);
        doc["macro"] = report_json(macro);
    }
    std::cout << sdpost::format_der_table(rows);
    if (!o.json_out.empty()) write_file(o.json_out, dump(doc));
    return kOk;
}

// ─── sweep-chunks ───────────────────────────────────────────────────────────

struct SweepOptions {
    PipelineOptions pipe;
    std::vector<double> lengths;
    std::vector<std::string> scripts;
    std::string json_out;
};

int cmd_sweep(SweepOptions& o) {
    finish_options(o.pipe);
    std::vector<sdpost::SweepItem> items;
    for (const auto& path : o.scripts) {
        const auto s = sdpost::mock::load_script(path);
        items.push_back({sdpost::mock::audio_ref(s, path), backends_for(s, o.pipe), sdpost::mock::reference_annotation(s)});
    }
    const auto rows = sdpost::sweep_chunks(items, o.lengths, o.pipe.config);
    std::vector<sdpost::ScoreRow> table;
    json doc = json::array();
    for (const auto& r : rows) {
        char name[32];
        std::snprintf(name, sizeof name, "%gs", r.chunk_length);
        table.push_back({name, r.report, {}});
        doc.push_back({{"chunk_length", r.chunk_length}, {"report", report_json(r.report)}});
    }
    std::cout << sdpost::format_der_table(table);
    if (!o.json_out.empty()) write_file(o.json_out, dump(doc));
    return kOk;
}

// ─── mock-gen ───────────────────────────────────────────────────────────────

struct MockGenOptions {
    std::string scenario = "clean";
    std::optional<std::uint64_t> seed;
    double duration = 600.0;
    std::string out;
    std::string rttm_out;
    std::string words_out;
};

int cmd_mock_gen(const MockGenOptions& o) {
    namespace m = sdpost::mock;
    m::Script s;
    if (o.scenario == "clean") s = o.seed ? m::clean_scenario(*o.seed) : m::clean_scenario();
    else if (o.scenario == "split") s = o.seed ? m::split_speaker_scenario(*o.seed) : m::split_speaker_scenario();
    else if (o.scenario == "drift") s = m::drift_scenario(o.seed.value_or(13), o.duration);
    else s = o.seed ? m::messy_scenario(*o.seed) : m::messy_scenario();

    write_file(o.out, dump(m::to_json(s)));
    if (!o.rttm_out.empty()) write_file(o.rttm_out, sdpost::format_rttm(s.recording_id, m::reference_annotation(s)));
    if (!o.words_out.empty()) {
        json words = json::array();
        for (const auto& t : s.turns)
            if (t.in_reference)
                for (const auto& w : t.words) words.push_back({{"text", w.text}, {"start", w.start}, {"end", w.end}});
        write_file(o.words_out, dump({{"recording_id", s.recording_id}, {"words", std::move(words)}}));
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speaker diarization post-processing with acoustic re-verification and LLM identity mapping"};
    app.require_subcommand(1);

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "run the full pipeline on mock scripts");
    add_pipeline_flags(*run_cmd, run.pipe);
    run_cmd->add_option("scripts", run.scripts, "mock script JSON files")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out-dir", run.out_dir, "output directory")->capture_default_str();

    ScoreOptions score;
    auto* score_cmd = app.add_subcommand("score", "score hypotheses against a reference RTTM");
    score_cmd->add_option("--ref", score.reference, "reference RTTM")->required()->check(CLI::ExistingFile);
    score_cmd->add_option("--hyp", score.hypotheses, "hypothesis RTTM or pipeline JSON files")
        ->required()
        ->check(CLI::ExistingFile);
    score_cmd->add_option("--ref-words", score.reference_words, "reference word-timestamp JSON (adds WER)")
        ->check(CLI::ExistingFile);
    score_cmd->add_option("--collar", score.collar, "collar, seconds")->capture_default_str();
    score_cmd->add_option("--json-out", score.json_out, "write the report as JSON");

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep-chunks", "score chunked diarization at several chunk lengths");
    add_pipeline_flags(*sweep_cmd, sweep.pipe);
    sweep_cmd->add_option("--lengths", sweep.lengths, "chunk lengths, seconds")->required()->delimiter(',')->allow_extra_args(false);
    sweep_cmd->add_option("scripts", sweep.scripts, "mock script JSON files")->check(CLI::ExistingFile);
    sweep_cmd->add_option("--json-out", sweep.json_out, "write the table as JSON");

    MockGenOptions gen;
    auto* gen_cmd = app.add_subcommand("mock-gen", "write a mock script fixture");
    gen_cmd->add_option("--scenario", gen.scenario, "fixture kind")
        ->check(CLI::IsMember({"clean", "split", "drift", "messy"}))
        ->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "random seed");
    gen_cmd->add_option("--duration", gen.duration, "recording length for the drift scenario, seconds")
        ->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "script path")->required();
    gen_cmd->add_option("--rttm", gen.rttm_out, "also write the reference RTTM");
    gen_cmd->add_option("--words", gen.words_out, "also write the reference word-timestamp JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*score_cmd) return cmd_score(score);
        if (*sweep_cmd) return cmd_sweep(sweep);
        if (*gen_cmd) return cmd_mock_gen(gen);
    } catch (const sdpost::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParse;
    } catch (const sdpost::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kOk;
}
