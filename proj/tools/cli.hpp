// Copyright 2026 The Latte Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

// Command-line front end. Kept in a header so tests can drive run_cli in-process.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latte/latte.hpp"

namespace latte::cli {

/// Process exit codes. Listed in --help.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kFormat = 4,
    kData = 5,
};

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return kUsage;
        case ErrorKind::io: return kIo;
        case ErrorKind::bad_magic:
        case ErrorKind::unsupported_version:
        case ErrorKind::truncated:
        case ErrorKind::non_finite:
        case ErrorKind::norm_out_of_tolerance:
        case ErrorKind::zero_norm:
        case ErrorKind::invalid_record:
        case ErrorKind::mixed_dim:
        case ErrorKind::duplicate_entry:
        case ErrorKind::malformed_line: return kFormat;
        case ErrorKind::dim_mismatch:
        case ErrorKind::empty_index:
        case ErrorKind::missing_centroids:
        case ErrorKind::no_kept_tokens:
        case ErrorKind::unknown_id: return kData;
    }
    return kInternal;
}

inline constexpr const char* kExitCodeHelp =
    "Exit codes: 0 success, 1 internal error, 2 usage error (unknown flag, bad or inconsistent values),\n"
    "3 missing or unreadable file, 4 malformed input file, 5 data error (dimension mismatch, missing\n"
    "centroids, unknown id).";

struct ScoringFlags {
    std::string mode = "both";
    std::uint32_t clip_len = 150;
    std::optional<double> delta_override;

    void add_to(CLI::App& app) {
        app.add_option("--mode", mode, "Attention inclusion: none, query-only, doc-only, both")
            ->capture_default_str()
            ->check(CLI::IsMember({"none", "query-only", "doc-only", "both"}));
        app.add_option("--clip-len,-l", clip_len, "Document length clipping l (tokens)")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        app.add_option("--delta-override", delta_override, "Fixed regularizer exponent in (0, 1]");
    }

    ScoringConfig config() const {
        ScoringConfig c;
        c.mode = *parse_attention_mode(mode);
        c.clip_len = clip_len;
        c.delta_override = delta_override;
        c.validate();
        return c;
    }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

/// Reads "key = value" lines ('#' comments allowed) and appends "--key value" for every key whose flag
/// is not already on the command line, so explicit flags win.
inline void merge_config_file(std::vector<std::string>& args, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config file " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> extra;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::invalid_argument,
                        path.string() + " line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const std::string flag = "--" + key;
        const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
        if (given) continue;
        if (value == "true") {
            extra.push_back(flag);
        } else if (value != "false") {
            extra.push_back(flag);
            extra.push_back(value);
        }
    }
    args.insert(args.end(), extra.begin(), extra.end());
}

inline std::vector<RunEntry> to_run(const std::vector<SearchResult>& results, const std::string& tag) {
    std::vector<RunEntry> run;
    for (const auto& r : results) {
        std::uint32_t rank = 1;
        for (const auto& h : r.hits) run.push_back({r.query_id, h.doc_id, rank++, h.score, tag});
    }
    return run;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorKind::io, "failed writing " + path.string());
}

inline std::vector<MetricSpec> parse_metrics(const std::vector<std::string>& names) {
    std::vector<MetricSpec> metrics;
    for (const auto& name : names) {
        for (const auto& item : split_list(name)) metrics.push_back(parse_metric(item));
    }
    if (metrics.empty()) throw Error(ErrorKind::invalid_argument, "at least one --metric is required");
    return metrics;
}

inline std::string report_text(const MetricReport& report) {
    std::ostringstream out;
    write_report(report, out);
    return out.str();
}

inline void print_summary(const MetricReport& report, std::ostream& out) {
    for (const auto& [name, value] : report.aggregate) {
        out << name << '\t' << format_double(value) << "\tscored=" << report.scored.at(name)
            << "\tskipped=" << report.skipped.at(name) << '\n';
    }
}

inline std::vector<SearchResult> run_search(const RetrievalIndex& index, const std::vector<EmbeddedRecord>& queries,
                                            std::size_t k, const ScoringConfig& config,
                                            std::optional<std::size_t> candidates, unsigned threads) {
    if (candidates) return batch_search_pruned(index, queries, k, config, *candidates, threads);
    return batch_search(index, queries, k, config, threads);
}

}  // namespace detail

/// Runs one `latte` invocation. `args` excludes the program name.
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"latte: late-interaction retrieval with attention-weighted MaxSim", "latte"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    std::string config_file;
    app.add_option("--config", config_file, "key=value file of defaults; explicit flags win");

    RecordLimits limits;
    app.add_option("--max-query-tokens", limits.max_query_tokens, "Query token cap")->capture_default_str();
    app.add_option("--max-doc-tokens", limits.max_document_tokens, "Document token cap")->capture_default_str();

    // index
    auto* index_cmd = app.add_subcommand("index", "Build an index directory from a document LIRE file");
    std::string docs_path, index_dir;
    std::optional<std::uint32_t> centroid_count;
    std::uint64_t kmeans_seed = 0;
    index_cmd->add_option("--docs", docs_path, "Document LIRE file")->required();
    index_cmd->add_option("--out", index_dir, "Output index directory")->required();
    index_cmd->add_option("--centroids,-K", centroid_count, "Train K token centroids for pruned search");
    index_cmd->add_option("--kmeans-seed", kmeans_seed, "k-means seed")->capture_default_str();

    // search
    auto* search_cmd = app.add_subcommand("search", "Rank indexed documents for every query; writes a TREC run");
    std::string queries_path, run_path, tag = "latte";
    std::size_t k = 10;
    std::optional<std::size_t> candidates;
    unsigned threads = 0;
    ScoringFlags search_flags;
    search_cmd->add_option("--index", index_dir, "Index directory")->required();
    search_cmd->add_option("--queries", queries_path, "Query LIRE file")->required();
    search_cmd->add_option("--out", run_path, "Output run file")->required();
    search_cmd->add_option("--k", k, "Hits per query")->capture_default_str()->check(CLI::PositiveNumber);
    search_cmd->add_option("--candidates,-C", candidates, "Centroid-pruned search with C exact rescores");
    search_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    search_cmd->add_option("--tag", tag, "Run tag column")->capture_default_str();
    search_flags.add_to(*search_cmd);

    // score
    auto* score_cmd = app.add_subcommand("score", "Score one query/document pair and explain each query token");
    std::string query_id, doc_id;
    ScoringFlags score_flags;
    score_cmd->add_option("--index", index_dir, "Index directory")->required();
    score_cmd->add_option("--queries", queries_path, "Query LIRE file")->required();
    score_cmd->add_option("--query-id", query_id, "Query id")->required();
    score_cmd->add_option("--doc-id", doc_id, "Document id")->required();
    score_flags.add_to(*score_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a run against qrels, or combine reports");
    std::string qrels_path, report_path;
    std::vector<std::string> metric_names{"recall@10", "ndcg@10", "success@5"};
    std::vector<std::string> combine_paths;
    auto* eval_run = eval_cmd->add_option("--run", run_path, "TREC run file");
    auto* eval_qrels = eval_cmd->add_option("--qrels", qrels_path, "Qrels TSV");
    auto* eval_metric = eval_cmd->add_option("--metric", metric_names, "recall@K, success@K or ndcg@K (repeatable)")
                            ->capture_default_str()
                            ->delimiter(',');
    auto* eval_combine = eval_cmd->add_option("--combine", combine_paths,
                                              "Report TSVs to merge into a query-count weighted mean");
    eval_cmd->add_option("--out", report_path, "Output report TSV")->required();
    eval_run->needs(eval_qrels);
    eval_qrels->needs(eval_run);
    eval_combine->excludes(eval_run)->excludes(eval_qrels)->excludes(eval_metric);

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic corpus (docs.lir, queries.lir, qrels.tsv)");
    SynthSpec spec;
    std::string out_dir;
    bool toy = false;
    synth_cmd->add_option("--out-dir", out_dir, "Output directory")->required();
    synth_cmd->add_flag("--toy", toy, "Write the four-record toy fixture instead of a random corpus");
    synth_cmd->add_option("--seed", spec.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--docs", spec.doc_count, "Document count")->capture_default_str();
    synth_cmd->add_option("--queries", spec.query_count, "Query count")->capture_default_str();
    synth_cmd->add_option("--dim", spec.dim, "Embedding dimension")->capture_default_str();
    synth_cmd->add_option("--doc-tokens-min", spec.doc_tokens.min)->capture_default_str();
    synth_cmd->add_option("--doc-tokens-max", spec.doc_tokens.max)->capture_default_str();
    synth_cmd->add_option("--query-tokens-min", spec.query_tokens.min)->capture_default_str();
    synth_cmd->add_option("--query-tokens-max", spec.query_tokens.max)->capture_default_str();
    synth_cmd->add_option("--strength", spec.attention_signal_strength, "Attention signal strength in [0, 1]")
        ->capture_default_str();
    synth_cmd->add_option("--relevant", spec.relevant_per_query, "Relevant documents per query")
        ->capture_default_str();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Search + eval once per clip length l");
    std::vector<std::uint32_t> clip_lens;
    ScoringFlags sweep_flags;
    std::vector<std::string> sweep_metrics{"ndcg@10"};
    sweep_cmd->add_option("--index", index_dir, "Index directory")->required();
    sweep_cmd->add_option("--queries", queries_path, "Query LIRE file")->required();
    sweep_cmd->add_option("--qrels", qrels_path, "Qrels TSV")->required();
    sweep_cmd->add_option("--clip-lens", clip_lens, "Comma-separated l values")->required()->delimiter(',');
    sweep_cmd->add_option("--metric", sweep_metrics, "Metrics per report")->capture_default_str()->delimiter(',');
    sweep_cmd->add_option("--out-dir", out_dir, "Directory for run_l<L>.txt and report_l<L>.tsv")->required();
    sweep_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
    sweep_cmd->add_option("--mode", sweep_flags.mode, "Attention inclusion")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "query-only", "doc-only", "both"}));

    try {
        // --config is honoured before parsing so its values lose to explicit flags.
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                detail::merge_config_file(args, args[i + 1]);
                break;
            }
            if (args[i].rfind("--config=", 0) == 0) {
                detail::merge_config_file(args, args[i].substr(9));
                break;
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "latte: " << e.what() << '\n';
        return kUsage;
    } catch (const Error& e) {
        err << "latte: " << e.what() << '\n';
        return exit_code_for(e.kind());
    }

    try {
        if (*index_cmd) {
            IndexOptions options;
            options.centroids = centroid_count;
            options.kmeans_seed = kmeans_seed;
            options.limits = limits;
            auto docs = read_records_file(docs_path, limits);
            auto index = RetrievalIndex::build(std::move(docs), options);
            save_index(index, index_dir, limits);
            out << "indexed " << index.size() << " documents (dim " << index.dim() << ")";
            if (index.centroids()) out << " with " << index.centroids()->size() << " centroids";
            out << '\n';
        } else if (*search_cmd) {
            const auto config = search_flags.config();
            if (candidates && *candidates < k) throw Error(ErrorKind::invalid_argument, "--candidates must be >= --k");
            auto index = load_index(index_dir, limits);
            auto queries = read_records_file(queries_path, limits);
            auto results = detail::run_search(index, queries, k, config, candidates, threads);
            std::ostringstream text;
            write_run(detail::to_run(results, tag), text);
            detail::write_text_file(run_path, text.str());
            out << "wrote " << results.size() << " queries to " << run_path << '\n';
        } else if (*score_cmd) {
            const auto config = score_flags.config();
            auto index = load_index(index_dir, limits);
            auto queries = read_records_file(queries_path, limits);
            auto q = std::find_if(queries.begin(), queries.end(), [&](const auto& r) { return r.id == query_id; });
            if (q == queries.end()) throw Error(ErrorKind::unknown_id, "query '" + query_id + "' not found");
            auto ord = index.find(doc_id);
            if (!ord) throw Error(ErrorKind::unknown_id, "document '" + doc_id + "' not found");
            const auto& doc = index.document(*ord);
            const auto details = explain_pair(*q, doc, config);
            double total = 0.0;
            for (const auto& d : details) total += d.contribution;
            out << "score\t" << format_double(total) << '\n';
            out << "query_token\tdoc_token\tcosine\tquery_multiplier\tdoc_multiplier\tcontribution\n";
            for (const auto& d : details) {
                out << d.query_token << '\t' << d.doc_token << '\t' << format_double(d.cosine) << '\t'
                    << format_double(d.query_multiplier) << '\t' << format_double(d.doc_multiplier) << '\t'
                    << format_double(d.contribution) << '\n';
            }
        } else if (*eval_cmd) {
            MetricReport report;
            if (!combine_paths.empty()) {
                std::vector<MetricReport> parts;
                for (const auto& path : combine_paths) {
                    std::ifstream in(path);
                    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
                    parts.push_back(read_report(in));
                }
                report = combine_reports(parts);
                detail::write_text_file(report_path, detail::report_text(report));
            } else {
                if (run_path.empty()) throw Error(ErrorKind::invalid_argument, "eval needs --run and --qrels, or --combine");
                const auto metrics = detail::parse_metrics(metric_names);
                const auto qrels = read_qrels_file(qrels_path);
                const auto run = read_run_file(run_path);
                report = evaluate_run(run, qrels, metrics);
                detail::write_text_file(report_path, detail::report_text(report));
            }
            detail::print_summary(report, out);
        } else if (*synth_cmd) {
            const std::filesystem::path dir(out_dir);
            std::vector<EmbeddedRecord> docs, queries;
            Qrels qrels;
            if (toy) {
                auto f = toy_fixture();
                docs = {f.d1, f.d2, f.d3};
                queries = {f.query};
                qrels.add(f.query.id, f.d1.id, 1);
            } else {
                auto corpus = gen_corpus(spec, limits);
                docs = std::move(corpus.documents);
                queries = std::move(corpus.queries);
                qrels = std::move(corpus.qrels);
            }
            std::filesystem::create_directories(dir);
            write_records_file(dir / "docs.lir", docs, limits);
            write_records_file(dir / "queries.lir", queries, limits);
            std::ostringstream text;
            write_qrels(qrels, text);
            detail::write_text_file(dir / "qrels.tsv", text.str());
            out << "wrote " << docs.size() << " documents, " << queries.size() << " queries, " << qrels.size()
                << " qrels to " << dir.string() << '\n';
        } else if (*sweep_cmd) {
            const auto metrics = detail::parse_metrics(sweep_metrics);
            std::uint32_t k_max = 1;
            for (const auto& m : metrics) k_max = std::max(k_max, m.k);
            auto index = load_index(index_dir, limits);
            auto queries = read_records_file(queries_path, limits);
            const auto qrels = read_qrels_file(qrels_path);
            const std::filesystem::path dir(out_dir);
            out << "clip_len";
            for (const auto& m : metrics) out << '\t' << m.name();
            out << '\n';
            for (auto l : clip_lens) {
                ScoringFlags flags = sweep_flags;
                flags.clip_len = l;
                const auto config = flags.config();
                auto results = batch_search(index, queries, k_max, config, threads);
                const auto run = detail::to_run(results, "latte-l" + std::to_string(l));
                std::ostringstream run_text;
                write_run(run, run_text);
                detail::write_text_file(dir / ("run_l" + std::to_string(l) + ".txt"), run_text.str());
                const auto report = evaluate_run(run, qrels, metrics);
                detail::write_text_file(dir / ("report_l" + std::to_string(l) + ".tsv"), detail::report_text(report));
                out << l;
                for (const auto& m : metrics) out << '\t' << format_double(report.aggregate.at(m.name()));
                out << '\n';
            }
        }
    } catch (const Error& e) {
        err << "latte: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "latte: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "latte: " << e.what() << '\n';
        return kInternal;
    }
    return kOk;
}

}  // namespace latte::cli
