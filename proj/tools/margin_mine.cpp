// Command-line front end for margin-based bitext mining.
//
//   margin_mine preprocess  clean sentences and drop short document pairs
//   margin_mine mine        mine one channel into a pairs TSV
//   margin_mine combine     strict / pairwise intersection of three channels
//   margin_mine filter      rule-based pair filters
//   margin_mine eval        precision / recall / F1 against gold pairs
//   margin_mine hist        margin score histogram (CSV, optional SVG)
//   margin_mine summarize   per-method F1 deltas against a baseline
//
// Exit codes: 0 success, 2 input or format error, 3 configuration error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "CLI11.hpp"
#include "margin_mine/margin_mine.hpp"

namespace fs = std::filesystem;
using namespace margin_mine;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;

std::size_t
resolve_threads(std::optional<std::size_t> flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("MARGIN_MINE_THREADS"); env && *env) {
        return parse_count(env, "MARGIN_MINE_THREADS");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void
emit(const std::optional<std::string>& out, const std::string& content) {
    if (out) {
        auto f = io::open_out(*out, std::ios::binary);
        f << content;
    } else {
        std::cout << content;
    }
}

void
print_warnings(const MineStats& stats) {
    for (const auto& w : stats.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
}

/// Job-related flags shared by mine and combine; unset values fall back to
/// the manifest.
struct JobFlags {
    std::optional<std::string> manifest;
    std::optional<std::string> src_meta, tgt_meta, src_emb, tgt_emb, links;
    std::optional<std::string> src_trans_emb, tgt_trans_emb;
    std::optional<std::size_t> k;
    std::optional<std::string> join, threshold, scope;
    bool strict_mean = false;
    std::optional<std::size_t> threads;

    void
    add_to(CLI::App& cmd) {
        cmd.add_option("--manifest", manifest, "key = value manifest file");
        cmd.add_option("--src-meta", src_meta, "source sentence metadata (JSONL)");
        cmd.add_option("--tgt-meta", tgt_meta, "target sentence metadata (JSONL)");
        cmd.add_option("--src-emb", src_emb, "source embeddings (EMB1)");
        cmd.add_option("--tgt-emb", tgt_emb, "target embeddings (EMB1)");
        cmd.add_option("--links", links, "document links TSV");
        cmd.add_option("--src-trans-emb", src_trans_emb, "embeddings of the source translated into the target language");
        cmd.add_option("--tgt-trans-emb", tgt_trans_emb, "embeddings of the target translated into the source language");
        cmd.add_option("--k", k, "neighbors per query (default 4)");
        cmd.add_option("--join", join, "intersect | union | max-score");
        cmd.add_option("--threshold", threshold,
                       "margin threshold: a number, or preset ccmatrix (1.06), bucc (1.20), high (1.35)");
        cmd.add_option("--scope", scope, "doc | global");
        cmd.add_flag("--strict-mean", strict_mean, "divide neighbor means by k even for tiny pools");
        cmd.add_option("--threads", threads, "worker threads (env MARGIN_MINE_THREADS)");
    }

    JobManifest
    resolve() const {
        JobManifest m = manifest ? parse_manifest(*manifest) : JobManifest{};
        auto set_path = [&](const char* key, const std::optional<std::string>& v) {
            if (v) {
                m.paths[key] = *v;
            }
        };
        set_path("src_meta", src_meta);
        set_path("tgt_meta", tgt_meta);
        set_path("src_emb", src_emb);
        set_path("tgt_emb", tgt_emb);
        set_path("links", links);
        set_path("src_trans_emb", src_trans_emb);
        set_path("tgt_trans_emb", tgt_trans_emb);
        if (k) {
            m.config.k = *k;
        }
        if (join) {
            m.config.join = parse_join(*join);
        }
        if (threshold) {
            m.config.threshold = parse_threshold(*threshold);
        }
        if (scope) {
            m.config.scope = parse_scope(*scope);
        }
        if (strict_mean) {
            m.config.mean_mode = MeanMode::Strict;
        }
        m.config.threads = resolve_threads(threads ? threads : m.threads);
        for (const char* required : {"src_meta", "tgt_meta", "src_emb", "tgt_emb"}) {
            if (!m.path(required)) {
                throw Error(ErrorCode::InvalidConfig, std::string("missing --") + required);
            }
        }
        m.validate();
        return m;
    }
};

struct Loaded {
    Job job;
    ChannelInputs inputs;
};

std::unique_ptr<Loaded>
load(const JobManifest& m) {
    io::JobPaths paths{*m.path("src_meta"), *m.path("tgt_meta"), *m.path("src_emb"), *m.path("tgt_emb"),
                       m.path("links")};
    auto loaded = std::make_unique<Loaded>();
    loaded->job = io::load_job(paths);
    if (loaded->job.links.empty() && m.config.scope == Scope::Document) {
        throw Error(ErrorCode::NoDocumentLinks, "document scope needs --links (or use --scope global)");
    }
    loaded->inputs.original = &loaded->job;
    if (auto p = m.path("src_trans_emb")) {
        loaded->inputs.source_translated = io::load_channel_embeddings(*p, loaded->job.source);
    }
    if (auto p = m.path("tgt_trans_emb")) {
        loaded->inputs.target_translated = io::load_channel_embeddings(*p, loaded->job.target);
    }
    return loaded;
}

struct MineCmd {
    JobFlags job;
    std::optional<std::string> channel;
    std::optional<std::string> out;

    int
    run() const {
        auto m = job.resolve();
        Channel which = m.channel.value_or(Channel::Original);
        if (channel) {
            auto c = parse_channel(*channel);
            if (!c || *c == Channel::Combined) {
                throw Error(ErrorCode::InvalidConfig, "--channel must be original, en_to_xx or xx_to_en");
            }
            which = *c;
        }
        auto loaded = load(m);
        MineStats stats;
        auto pairs = mine_channel(loaded->inputs, which, m.config, &stats);
        print_warnings(stats);
        emit(out ? out : m.out, io::format_pairs(pairs));
        std::cerr << "mined " << pairs.size() << " pairs (" << channel_name(which) << ", "
                  << join_name(m.config.join) << ", k=" << m.config.k << ", " << stats.blocks_mined
                  << " blocks, " << stats.blocks_skipped << " skipped)\n";
        return 0;
    }
};

struct CombineCmd {
    JobFlags job;
    std::vector<std::string> pair_files;
    std::optional<std::string> mode;
    std::optional<std::string> out;

    int
    run() const {
        if (!pair_files.empty()) {
            if (pair_files.size() != 3) {
                throw Error(ErrorCode::MissingChannel,
                            "--pairs needs three files: original, en_to_xx, xx_to_en");
            }
            if (!mode) {
                throw Error(ErrorCode::InvalidConfig, "--mode is required");
            }
            auto a = io::read_pairs(pair_files[0]);
            auto b = io::read_pairs(pair_files[1]);
            auto c = io::read_pairs(pair_files[2]);
            auto combined = combine(a, b, c, parse_combine_mode(*mode));
            emit(out, io::format_pairs(combined));
            std::cerr << "combined " << combined.size() << " pairs\n";
            return 0;
        }
        auto m = job.resolve();
        if (mode) {
            m.combine = parse_combine_mode(*mode);
        }
        if (!m.combine) {
            throw Error(ErrorCode::InvalidConfig, "--mode is required");
        }
        auto loaded = load(m);
        MineStats stats;
        auto combined = mine_and_combine(loaded->inputs, m.config, *m.combine, &stats);
        print_warnings(stats);
        emit(out ? out : m.out, io::format_pairs(combined));
        std::cerr << "combined " << combined.size() << " pairs\n";
        return 0;
    }
};

struct PreprocessCmd {
    std::string src_meta, tgt_meta, out_dir;
    std::optional<std::string> links, src_emb, tgt_emb;
    bool strip_urls = false, strip_nonstandard = false, collapse_whitespace = false;
    std::vector<std::string> noise_tokens;
    std::optional<double> min_src_words, min_tgt_words, bottom_percentile;

    int
    run() const {
        CleanupConfig cleanup{strip_urls, strip_nonstandard, collapse_whitespace, noise_tokens};
        cleanup.validate();
        std::optional<DocLengthFilter> filter;
        if (min_src_words || min_tgt_words) {
            if (!min_src_words || !min_tgt_words) {
                throw Error(ErrorCode::InvalidConfig, "--min-src-words and --min-tgt-words go together");
            }
            if (bottom_percentile) {
                throw Error(ErrorCode::InvalidConfig, "choose either word minimums or --bottom-percentile");
            }
            filter = DocLengthFilter::absolute_words(*min_src_words, *min_tgt_words);
        } else if (bottom_percentile) {
            filter = DocLengthFilter::bottom_percentile(*bottom_percentile);
        }
        if (filter) {
            filter->validate();
            if (!links) {
                throw Error(ErrorCode::InvalidConfig, "document filtering needs --links");
            }
        }

        auto source = io::read_metadata(src_meta, Side::Source);
        auto target = io::read_metadata(tgt_meta, Side::Target);
        std::optional<io::RawEmbeddings> src_raw, tgt_raw;
        auto read_raw = [](const std::string& path, const CorpusSide& side) {
            auto raw = io::read_embeddings(path);
            if (raw.count() != side.sentences.size()) {
                throw Error(ErrorCode::IdMismatch, path + " row count differs from its metadata");
            }
            return raw;
        };
        if (src_emb) {
            src_raw = read_raw(*src_emb, source);
        }
        if (tgt_emb) {
            tgt_raw = read_raw(*tgt_emb, target);
        }
        std::vector<DocumentLink> link_list;
        if (links) {
            link_list = io::read_links(*links);
        }

        auto src_clean = clean_corpus(source, cleanup);
        auto tgt_clean = clean_corpus(target, cleanup);
        for (const auto* c : {&src_clean, &tgt_clean}) {
            for (const auto& id : c->dropped_ids) {
                std::cerr << "dropped empty " << side_name(c->side.side) << " sentence " << id << '\n';
            }
        }

        std::vector<DocumentLink> kept_links = link_list;
        if (filter) {
            auto stats = document_stats(src_clean.side, tgt_clean.side, link_list);
            auto result = filter_documents(stats, *filter);
            kept_links.clear();
            for (const auto& s : result.kept) {
                kept_links.push_back(s.link);
            }
            std::cerr << "document pairs: " << stats.size() << " in, " << result.kept.size() << " kept, "
                      << result.dropped.size() << " dropped\n";
            if (result.src_cutoff_sentences) {
                std::cerr << "realized cutoffs: " << *result.src_cutoff_sentences << " source / "
                          << *result.tgt_cutoff_sentences << " target sentences\n";
            }
            std::unordered_set<std::string> src_docs, tgt_docs;
            for (const auto& l : kept_links) {
                src_docs.insert(l.src_doc);
                tgt_docs.insert(l.tgt_doc);
            }
            auto restrict = [](CleanedSide& c, const std::unordered_set<std::string>& docs) {
                CleanedSide r;
                r.side.side = c.side.side;
                for (std::size_t i = 0; i < c.side.sentences.size(); ++i) {
                    if (docs.count(c.side.sentences[i].doc_id)) {
                        r.side.sentences.push_back(c.side.sentences[i]);
                        r.kept_rows.push_back(c.kept_rows[i]);
                    }
                }
                c = std::move(r);
            };
            restrict(src_clean, src_docs);
            restrict(tgt_clean, tgt_docs);
        }

        const fs::path dir(out_dir);
        fs::create_directories(dir);
        io::write_metadata(dir / "source.jsonl", src_clean.side);
        io::write_metadata(dir / "target.jsonl", tgt_clean.side);
        if (links) {
            io::write_links(dir / "links.tsv", kept_links);
        }
        auto write_rows = [](const fs::path& path, const io::RawEmbeddings& raw, const std::vector<std::size_t>& rows) {
            std::vector<float> values;
            values.reserve(rows.size() * raw.dim);
            for (auto r : rows) {
                values.insert(values.end(), raw.values.begin() + static_cast<std::ptrdiff_t>(r * raw.dim),
                              raw.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * raw.dim));
            }
            io::write_embeddings(path, raw.dim, values);
        };
        if (src_raw) {
            write_rows(dir / "source.emb", *src_raw, src_clean.kept_rows);
        }
        if (tgt_raw) {
            write_rows(dir / "target.emb", *tgt_raw, tgt_clean.kept_rows);
        }
        std::cerr << "sentences: source " << source.sentences.size() << " -> " << src_clean.side.sentences.size()
                  << ", target " << target.sentences.size() << " -> " << tgt_clean.side.sentences.size() << '\n';
        return 0;
    }
};

struct EvalCmd {
    std::string pred, gold;
    std::optional<std::string> out;

    int
    run() const {
        auto report = evaluate(io::read_pairs(pred), io::read_gold(gold));
        emit(out, io::report_json(report).dump(2) + "\n");
        return 0;
    }
};

struct HistCmd {
    std::string pairs;
    std::size_t bins = 20;
    std::optional<double> lo, hi;
    std::optional<std::string> out, svg;

    int
    run() const {
        if (lo.has_value() != hi.has_value()) {
            throw Error(ErrorCode::InvalidConfig, "--lo and --hi go together");
        }
        std::optional<std::pair<double, double>> range;
        if (lo) {
            range = std::make_pair(*lo, *hi);
        }
        auto set = io::read_pairs(pairs);
        auto h = histogram(set, bins, range);
        emit(out, io::histogram_csv(h));
        if (svg) {
            auto f = io::open_out(*svg, std::ios::binary);
            f << io::histogram_svg(h, fs::path(pairs).filename().string());
        }
        if (h.clamped) {
            std::cerr << h.clamped << " scores fell outside the range and were clamped\n";
        }
        return 0;
    }
};

struct FilterCmd {
    std::string pairs, specs, src_meta, tgt_meta;
    std::optional<std::string> src_trans, tgt_trans, out;

    int
    run() const {
        auto filters = io::read_filter_specs(specs);
        auto source = io::read_metadata(src_meta, Side::Source);
        auto target = io::read_metadata(tgt_meta, Side::Target);
        PairTexts texts{io::texts_by_key(source), io::texts_by_key(target), std::nullopt, std::nullopt};
        if (src_trans) {
            texts.source_translations = io::read_translations(*src_trans, source);
        }
        if (tgt_trans) {
            texts.target_translations = io::read_translations(*tgt_trans, target);
        }
        auto in = io::read_pairs(pairs);
        auto result = apply_filters(in, filters, texts);
        emit(out, io::format_pairs(result.kept));
        for (std::size_t i = 0; i < filters.size(); ++i) {
            std::cerr << filter_kind_name(filters[i].kind) << ": " << result.dropped_per_filter[i]
                      << " pairs outside range\n";
        }
        std::cerr << "kept " << result.kept.size() << " of " << in.size() << " pairs\n";
        return 0;
    }
};

struct SummarizeCmd {
    std::string table, baseline;
    std::optional<std::string> levels, out;

    int
    run() const {
        const fs::path table_path(table);
        MethodGrid grid;
        auto lines = io::read_lines(table_path);
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (lines[i].empty()) {
                continue;
            }
            auto f = io::split_tabs(lines[i]);
            if (f.size() != 3) {
                io::format_error(table_path, i + 1, "expected language<TAB>method<TAB>report.json");
            }
            fs::path report{std::string(f[2])};
            if (report.is_relative()) {
                report = table_path.parent_path() / report;
            }
            grid[std::string(f[0])][std::string(f[1])] = io::read_report(report);
        }
        std::map<std::string, std::string> level_map;
        if (levels) {
            const fs::path level_path(*levels);
            auto lv = io::read_lines(level_path);
            for (std::size_t i = 0; i < lv.size(); ++i) {
                if (lv[i].empty()) {
                    continue;
                }
                auto f = io::split_tabs(lv[i]);
                if (f.size() != 2) {
                    io::format_error(level_path, i + 1, "expected language<TAB>level");
                }
                level_map[std::string(f[0])] = std::string(f[1]);
            }
        }
        auto rows = summarize_methods(grid, baseline, levels ? &level_map : nullptr);
        emit(out, io::summary_csv(rows));
        return 0;
    }
};

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"margin_mine: margin-based bitext mining"};
    app.require_subcommand(1);

    PreprocessCmd pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "clean sentences and drop short document pairs");
    pre_cmd->add_option("--src-meta", pre.src_meta)->required();
    pre_cmd->add_option("--tgt-meta", pre.tgt_meta)->required();
    pre_cmd->add_option("--out-dir", pre.out_dir)->required();
    pre_cmd->add_option("--links", pre.links);
    pre_cmd->add_option("--src-emb", pre.src_emb, "source embeddings to subset alongside the metadata");
    pre_cmd->add_option("--tgt-emb", pre.tgt_emb, "target embeddings to subset alongside the metadata");
    pre_cmd->add_flag("--strip-urls", pre.strip_urls);
    pre_cmd->add_flag("--strip-nonstandard", pre.strip_nonstandard);
    pre_cmd->add_flag("--collapse-whitespace", pre.collapse_whitespace);
    pre_cmd->add_option("--noise-token", pre.noise_tokens, "literal string to delete (repeatable)");
    pre_cmd->add_option("--min-src-words", pre.min_src_words);
    pre_cmd->add_option("--min-tgt-words", pre.min_tgt_words);
    pre_cmd->add_option("--bottom-percentile", pre.bottom_percentile, "drop this fraction of the shortest pairs");

    MineCmd mine_cmd_args;
    auto* mine_cmd = app.add_subcommand("mine", "mine sentence pairs from one channel");
    mine_cmd_args.job.add_to(*mine_cmd);
    mine_cmd->add_option("--channel", mine_cmd_args.channel, "original | en_to_xx | xx_to_en");
    mine_cmd->add_option("--out", mine_cmd_args.out, "pairs TSV (default stdout)");

    CombineCmd comb;
    auto* comb_cmd = app.add_subcommand("combine", "strict or pairwise intersection of three channels");
    comb.job.add_to(*comb_cmd);
    comb_cmd->add_option("--pairs", comb.pair_files, "original, en_to_xx and xx_to_en pair TSVs")->expected(3);
    comb_cmd->add_option("--mode", comb.mode, "strict | pairwise");
    comb_cmd->add_option("--out", comb.out);

    EvalCmd ev;
    auto* ev_cmd = app.add_subcommand("eval", "precision, recall and F1 against gold pairs");
    ev_cmd->add_option("--pred", ev.pred)->required();
    ev_cmd->add_option("--gold", ev.gold)->required();
    ev_cmd->add_option("--out", ev.out);

    HistCmd hist;
    auto* hist_cmd = app.add_subcommand("hist", "margin score histogram");
    hist_cmd->add_option("--pairs", hist.pairs)->required();
    hist_cmd->add_option("--bins", hist.bins);
    hist_cmd->add_option("--lo", hist.lo);
    hist_cmd->add_option("--hi", hist.hi);
    hist_cmd->add_option("--out", hist.out);
    hist_cmd->add_option("--svg", hist.svg);

    FilterCmd filt;
    auto* filt_cmd = app.add_subcommand("filter", "rule-based pair filters");
    filt_cmd->add_option("--pairs", filt.pairs)->required();
    filt_cmd->add_option("--specs", filt.specs)->required();
    filt_cmd->add_option("--src-meta", filt.src_meta)->required();
    filt_cmd->add_option("--tgt-meta", filt.tgt_meta)->required();
    filt_cmd->add_option("--src-trans", filt.src_trans, "source sentences translated, line-aligned");
    filt_cmd->add_option("--tgt-trans", filt.tgt_trans, "target sentences translated, line-aligned");
    filt_cmd->add_option("--out", filt.out);

    SummarizeCmd summ;
    auto* summ_cmd = app.add_subcommand("summarize", "per-method F1 deltas against a baseline");
    summ_cmd->add_option("--table", summ.table, "TSV: language, method, report JSON path")->required();
    summ_cmd->add_option("--baseline", summ.baseline)->required();
    summ_cmd->add_option("--levels", summ.levels, "TSV: language, resource level");
    summ_cmd->add_option("--out", summ.out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*pre_cmd) {
            return pre.run();
        }
        if (*mine_cmd) {
            return mine_cmd_args.run();
        }
        if (*comb_cmd) {
            return comb.run();
        }
        if (*ev_cmd) {
            return ev.run();
        }
        if (*hist_cmd) {
            return hist.run();
        }
        if (*filt_cmd) {
            return filt.run();
        }
        if (*summ_cmd) {
            return summ.run();
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_configuration_error(e.code()) ? kExitConfig : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitConfig;
}
