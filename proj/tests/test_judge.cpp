#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "pairforge/judge.hpp"
#include "pairforge/util.hpp"

using namespace pairforge;
using namespace pairforge::judge;

namespace {

std::string code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

// Scripted judge: arbitrary C++ deciding from the outgoing request.
struct LambdaTransport : backend::Transport {
    std::function<std::string(const backend::GenRequest&)> fn;
    explicit LambdaTransport(std::function<std::string(const backend::GenRequest&)> f)
        : fn(std::move(f)) {}
    backend::GenResult run_once(const backend::GenRequest& req) override {
        backend::GenResult res;
        res.text = fn(req);
        return res;
    }
};

backend::EndpointPtr scripted_judge(std::function<std::string(const backend::GenRequest&)> fn) {
    backend::EndpointConfig cfg;
    cfg.name = "judge";
    cfg.kind = "mock";
    cfg.max_concurrency = 4;
    cfg.retry.base_ms = 1;
    return std::make_shared<backend::Endpoint>(cfg,
                                               std::make_unique<LambdaTransport>(std::move(fn)));
}

// Recover the A/B slots from the rendered user message (either rubric).
struct Slots {
    std::string instruction, a, b;
};

Slots parse_slots(const backend::GenRequest& req) {
    const std::string& user = req.messages.at(1).content;
    auto between = [&](const std::string& open, const std::string& close) {
        std::size_t from = user.find(open);
        REQUIRE(from != std::string::npos);
        from += open.size();
        std::size_t to = close.empty() ? user.size() : user.find(close, from);
        REQUIRE(to != std::string::npos);
        return user.substr(from, to - from);
    };
    Slots s;
    if (starts_with(user, "<|User Prompt|>")) {
        s.instruction = between("<|User Prompt|>\n", "\n\n<|The Start of Assistant A's Answer|>");
        s.a = between("<|The Start of Assistant A's Answer|>\n",
                      "\n<|The End of Assistant A's Answer|>");
        s.b = between("<|The Start of Assistant B's Answer|>\n",
                      "\n<|The End of Assistant B's Answer|>");
    } else {
        s.instruction = between("User Prompt: ", "\n\nAssistant A: ");
        s.a = between("\n\nAssistant A: ", "\n\nAssistant B: ");
        s.b = between("\n\nAssistant B: ", "");
    }
    return s;
}

std::string always_a(const backend::GenRequest&) {
    return "Options were [[A>B]], [[A=B]], [[B>A]]. My final verdict is: [[A>B]]";
}

std::string longer_wins(const backend::GenRequest& req) {
    Slots s = parse_slots(req);
    if (s.a.size() > s.b.size()) return "verdict: [[A>B]]";
    if (s.b.size() > s.a.size()) return "verdict: [[B>A]]";
    return "verdict: [[A=B]]";
}

std::string lexicographic(const backend::GenRequest& req) {
    Slots s = parse_slots(req);
    if (s.a == s.b) return "verdict: [[A=B]]";
    return s.a < s.b ? "verdict: [[A>B]]" : "verdict: [[B>A]]";
}

std::vector<dataset::ContrastPair> fixture_pairs(int n, int chosen_longer_count) {
    std::vector<dataset::ContrastPair> pairs;
    for (int i = 0; i < n; ++i) {
        dataset::ContrastPair p;
        p.instruction_text = "Question " + std::to_string(i) + "?";
        p.instruction_id = dataset::instruction_id(p.instruction_text);
        p.strategy = kAllStrategies[static_cast<std::size_t>(i) % kAllStrategies.size()];
        p.mode = TaskMode::alignment;
        if (i < chosen_longer_count) {
            p.chosen = "a much longer chosen answer " + std::to_string(i);
            p.rejected = "short " + std::to_string(i);
        } else {
            p.chosen = "tiny " + std::to_string(i);
            p.rejected = "a much longer rejected answer " + std::to_string(i);
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

JudgeOptions options_of(std::int64_t n, bool debias, std::uint64_t seed = 0) {
    JudgeOptions o;
    o.sample_n = n;
    o.debias = debias;
    o.seed = seed;
    return o;
}

}  // namespace

// ---------------------------------------------------------------------------
// Prompt building
// ---------------------------------------------------------------------------

TEST_CASE("3-way judge prompt substitutes the slots verbatim") {
    auto messages = build_judge_prompt(default_rubric(RubricKind::contrast_3way), "Q", "X", "Y");
    REQUIRE(messages.size() == 2);
    CHECK(messages[0].role == backend::MessageRole::system);
    CHECK(messages[1].role == backend::MessageRole::user);
    CHECK(contains(messages[1].content, "User Prompt: Q"));
    CHECK(contains(messages[1].content, "Assistant A: X"));
    CHECK(contains(messages[1].content, "Assistant B: Y"));
}

TEST_CASE("5-way judge prompt uses the answer-block markers") {
    auto messages = build_judge_prompt(default_rubric(RubricKind::hh_pairwise_5way),
                                       "Q", "X", "Y");
    CHECK(contains(messages[1].content, "<|User Prompt|>\nQ"));
    CHECK(contains(messages[1].content, "<|The Start of Assistant A's Answer|>\nX\n"));
    CHECK(contains(messages[1].content, "<|The Start of Assistant B's Answer|>\nY\n"));
}

TEST_CASE("substitution never alters the rubric text outside the slots") {
    // Span-diff oracle: cutting the substituted values back out must
    // reproduce the template with its slot tokens removed.
    const auto& rubric = default_rubric(RubricKind::contrast_3way);
    const std::string instruction = "QWERTY-INSTRUCTION";
    const std::string a = "AAAA-RESPONSE";
    const std::string b = "BBBB-RESPONSE";
    auto messages = build_judge_prompt(rubric, instruction, a, b);
    std::string user = messages[1].content;

    std::string reconstructed = user;
    auto replace_once = [&](const std::string& value, const std::string& token) {
        std::size_t at = reconstructed.find(value);
        REQUIRE(at != std::string::npos);
        reconstructed = reconstructed.substr(0, at) + token +
                        reconstructed.substr(at + value.size());
    };
    replace_once(instruction, "{instruction}");
    replace_once(a, "{response_a}");
    replace_once(b, "{response_b}");
    CHECK(reconstructed == rubric.user_template);
    CHECK(messages[0].content == rubric.system_prompt);
}

TEST_CASE("judge prompt rejects empty inputs and oversize slots") {
    const auto& rubric = default_rubric(RubricKind::contrast_3way);
    CHECK(code_of([&] { build_judge_prompt(rubric, "", "a", "b"); }) == "empty_judge_input");
    CHECK(code_of([&] { build_judge_prompt(rubric, "q", " ", "b"); }) == "empty_judge_input");
    CHECK(code_of([&] {
              build_judge_prompt(rubric, "q", std::string(600, 'x'), "b", 512);
          }) == "slot_overflow");
}

TEST_CASE("shipped rubric texts match the transcribed golden files") {
    const std::string root = std::string(PF_SOURCE_DIR) + "/fixtures/golden/judge/";
    CHECK(default_rubric(RubricKind::contrast_3way).system_prompt ==
          read_file(root + "system_3way.txt"));
    CHECK(default_rubric(RubricKind::contrast_3way).user_template ==
          read_file(root + "user_3way.txt"));
    CHECK(default_rubric(RubricKind::hh_pairwise_5way).system_prompt ==
          read_file(root + "system_5way.txt"));
    CHECK(default_rubric(RubricKind::hh_pairwise_5way).user_template ==
          read_file(root + "user_5way.txt"));
}

// ---------------------------------------------------------------------------
// Verdict grammar
// ---------------------------------------------------------------------------

TEST_CASE("every admissible label round-trips through the parser") {
    for (Verdict v : {Verdict::a_strong_win, Verdict::a_win, Verdict::tie, Verdict::b_win,
                      Verdict::b_strong_win}) {
        std::string text = std::string("My final verdict is: ") + verdict_label(v);
        CHECK(parse_verdict(text, RubricKind::hh_pairwise_5way) == v);
    }
    for (Verdict v : {Verdict::a_win, Verdict::tie, Verdict::b_win}) {
        std::string text = std::string("verdict ") + verdict_label(v) + " end";
        CHECK(parse_verdict(text, RubricKind::contrast_3way) == v);
    }
}

TEST_CASE("the last verdict occurrence wins") {
    CHECK(parse_verdict("My final verdict is tie: [[A=B]]", RubricKind::contrast_3way) ==
          Verdict::tie);
    CHECK(parse_verdict("options are [[A>B]] or [[B>A]] ... verdict: [[B>A]]",
                        RubricKind::contrast_3way) == Verdict::b_win);
    CHECK(parse_verdict("1. [[A>>B]]\n2. [[A>B]]\n3. [[A=B]]\n4. [[B>A]]\n5. [[B>>A]]\n"
                        "My final verdict: [[A>B]]",
                        RubricKind::hh_pairwise_5way) == Verdict::a_win);
}

TEST_CASE("verdict errors") {
    CHECK(code_of([&] { parse_verdict("no brackets here", RubricKind::contrast_3way); }) ==
          "no_verdict_found");
    CHECK(code_of([&] { parse_verdict("[[not a verdict]]", RubricKind::contrast_3way); }) ==
          "no_verdict_found");
    CHECK(code_of([&] { parse_verdict("final: [[A>>B]]", RubricKind::contrast_3way); }) ==
          "inadmissible_verdict");
    // Unknown bracket payloads are skipped, not taken as the last occurrence.
    CHECK(parse_verdict("[[A>B]] then [[shrug]]", RubricKind::contrast_3way) == Verdict::a_win);
}

// ---------------------------------------------------------------------------
// Contrast accuracy
// ---------------------------------------------------------------------------

TEST_CASE("table arithmetic: 183 wins of 200 with no ties is 91.5") {
    auto pairs = fixture_pairs(200, 183);
    auto endpoint = scripted_judge(longer_wins);
    auto report = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(200, true));
    CHECK(report.overall.n == 200);
    CHECK(report.overall.wins == 183);
    CHECK(report.overall.ties == 0);
    CHECK(report.overall.losses == 17);
    CHECK(report.overall.percent() == doctest::Approx(91.5).epsilon(1e-9));
}

TEST_CASE("pure position bias cancels to exactly 50.0 under debias") {
    auto pairs = fixture_pairs(40, 25);
    auto endpoint = scripted_judge(always_a);
    auto report = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(40, true));
    CHECK(report.overall.n == 40);
    CHECK(report.overall.ties == 40);
    CHECK(report.overall.percent() == 50.0);
}

TEST_CASE("single-orientation mode judges each pair once") {
    auto pairs = fixture_pairs(30, 30);
    auto endpoint = scripted_judge(longer_wins);
    auto report = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(30, false));
    CHECK(report.overall.n == 30);
    CHECK(report.overall.wins == 30);  // chosen always longer
    CHECK(report.comparisons.size() == 30);
    auto debias = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(30, true));
    CHECK(debias.comparisons.size() == 60);
}

TEST_CASE("sampling is seeded and permutation-invariant") {
    auto pairs = fixture_pairs(60, 31);
    auto endpoint = scripted_judge(longer_wins);
    const auto& rubric = default_rubric(RubricKind::contrast_3way);

    auto a = contrast_accuracy(pairs, *endpoint, rubric, options_of(20, true, 7));
    std::vector<dataset::ContrastPair> shuffled = pairs;
    SplitMix64 rng(99);
    deterministic_shuffle(shuffled, rng);
    auto b = contrast_accuracy(shuffled, *endpoint, rubric, options_of(20, true, 7));
    CHECK(a.overall.wins == b.overall.wins);
    CHECK(a.overall.losses == b.overall.losses);
    CHECK(a.overall.n == b.overall.n);
    for (const auto& [name, line] : a.per_strategy) {
        CHECK(b.per_strategy.at(name).wins == line.wins);
    }

    auto c = contrast_accuracy(pairs, *endpoint, rubric, options_of(20, true, 8));
    bool identical = a.overall.wins == c.overall.wins && a.overall.losses == c.overall.losses;
    // A different seed draws a different sample (31/29 split makes equality
    // overwhelmingly unlikely for all per-strategy lines simultaneously).
    bool per_strategy_identical = true;
    for (const auto& [name, line] : a.per_strategy) {
        auto it = c.per_strategy.find(name);
        if (it == c.per_strategy.end() || it->second.n != line.n ||
            it->second.wins != line.wins) {
            per_strategy_identical = false;
        }
    }
    CHECK((!identical || !per_strategy_identical));
}

TEST_CASE("sample_n bounds are enforced") {
    auto pairs = fixture_pairs(5, 5);
    auto endpoint = scripted_judge(longer_wins);
    CHECK(code_of([&] {
              contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                options_of(6, true));
          }) == "invalid_sample");
    CHECK(code_of([&] {
              contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                options_of(0, true));
          }) == "invalid_sample");
}

TEST_CASE("judge failures are counted and excluded from n") {
    auto pairs = fixture_pairs(10, 10);
    auto endpoint = scripted_judge([](const backend::GenRequest& req) -> std::string {
        Slots s = parse_slots(req);
        if (contains(s.instruction, "Question 3?")) return "no verdict at all";
        if (s.a.size() > s.b.size()) return "[[A>B]]";
        return "[[B>A]]";
    });
    auto report = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(10, true));
    CHECK(report.overall.n == 9);
    CHECK(report.overall.errors == 1);
    CHECK(report.overall.wins == 9);
}

// ---------------------------------------------------------------------------
// Win rate
// ---------------------------------------------------------------------------

TEST_CASE("identical response maps score exactly 50.0") {
    std::map<std::string, std::string> ours;
    for (int i = 0; i < 17; ++i) {
        ours["Inst " + std::to_string(i)] = "Shared answer " + std::to_string(i);
    }
    for (bool debias : {false, true}) {
        for (auto judge_fn : {always_a, longer_wins}) {
            auto endpoint = scripted_judge(judge_fn);
            JudgeOptions o;
            o.debias = debias;
            auto report = win_rate(ours, ours, *endpoint,
                                   default_rubric(RubricKind::hh_pairwise_5way), o);
            CHECK(report.tally.n == 17);
            CHECK(report.tally.ties == 17);
            CHECK(report.tally.percent() == 50.0);  // exact
        }
    }
}

TEST_CASE("win rate arithmetic: 10 wins, 4 ties, 6 losses of 20 is 60.0") {
    std::map<std::string, std::string> ours, theirs;
    for (int i = 0; i < 10; ++i) {  // ours longer -> win
        std::string k = "w" + std::to_string(i);
        ours[k] = "a long winning answer " + std::to_string(i);
        theirs[k] = "short";
    }
    for (int i = 0; i < 4; ++i) {  // same length, different -> judge ties
        std::string k = "t" + std::to_string(i);
        ours[k] = "aaaa" + std::to_string(i);
        theirs[k] = "bbbb" + std::to_string(i);
    }
    for (int i = 0; i < 6; ++i) {  // theirs longer -> loss
        std::string k = "l" + std::to_string(i);
        ours[k] = "tiny";
        theirs[k] = "a long opposing answer " + std::to_string(i);
    }
    auto endpoint = scripted_judge(longer_wins);
    JudgeOptions o;
    o.debias = true;
    auto report = win_rate(ours, theirs, *endpoint, default_rubric(RubricKind::hh_pairwise_5way), o);
    CHECK(report.tally.n == 20);
    CHECK(report.tally.wins == 10);
    CHECK(report.tally.ties == 4);
    CHECK(report.tally.losses == 6);
    CHECK(report.tally.percent() == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("strong and weak wins both count as wins") {
    std::map<std::string, std::string> ours = {{"q", "much much longer answer"}};
    std::map<std::string, std::string> theirs = {{"q", "short"}};
    auto endpoint = scripted_judge([](const backend::GenRequest& req) -> std::string {
        Slots s = parse_slots(req);
        return s.a.size() > s.b.size() ? "[[A>>B]]" : "[[B>>A]]";
    });
    JudgeOptions o;
    o.debias = true;
    auto report = win_rate(ours, theirs, *endpoint, default_rubric(RubricKind::hh_pairwise_5way), o);
    CHECK(report.tally.wins == 1);
}

TEST_CASE("win_rate(X,Y) + win_rate(Y,X) = 100 exactly on random fixtures") {
    SplitMix64 rng(20240601);
    const auto& rubric = default_rubric(RubricKind::hh_pairwise_5way);
    for (int round = 0; round < 50; ++round) {
        std::map<std::string, std::string> x, y;
        int n = 3 + static_cast<int>(rng.below(9));
        for (int i = 0; i < n; ++i) {
            std::string key = "inst " + std::to_string(round) + ":" + std::to_string(i);
            std::string xs(1 + rng.below(12), 'x');
            std::string ys(1 + rng.below(12), 'y');
            if (rng.below(5) == 0) ys = xs;  // occasional identical pair
            x[key] = xs;
            y[key] = ys;
        }
        const bool debias = rng.below(2) == 0;
        auto judge_fn = (rng.below(2) == 0) ? longer_wins
                        : (rng.below(2) == 0) ? always_a
                                              : lexicographic;
        auto e1 = scripted_judge(judge_fn);
        auto e2 = scripted_judge(judge_fn);
        JudgeOptions o;
        o.debias = debias;
        auto xy = win_rate(x, y, *e1, rubric, o);
        auto yx = win_rate(y, x, *e2, rubric, o);
        CAPTURE(round);
        CHECK(xy.tally.n == yx.tally.n);
        CHECK(xy.tally.wins == yx.tally.losses);
        CHECK(xy.tally.losses == yx.tally.wins);
        // Exact rational identity: half-point scores complement to 2n.
        CHECK(xy.tally.half_points() + yx.tally.half_points() == 2 * xy.tally.n);
        CHECK(xy.tally.percent() + yx.tally.percent() == doctest::Approx(100.0).epsilon(1e-12));
    }
}

TEST_CASE("win rate key mismatch") {
    std::map<std::string, std::string> ours = {{"a", "1"}, {"b", "2"}};
    std::map<std::string, std::string> theirs = {{"a", "1"}, {"c", "2"}};
    auto endpoint = scripted_judge(always_a);
    JudgeOptions o;
    CHECK(code_of([&] {
              win_rate(ours, theirs, *endpoint, default_rubric(RubricKind::hh_pairwise_5way), o);
          }) == "key_mismatch");
    std::map<std::string, std::string> empty;
    CHECK(code_of([&] {
              win_rate(empty, empty, *endpoint, default_rubric(RubricKind::hh_pairwise_5way), o);
          }) == "key_mismatch");
}

TEST_CASE("reports serialize with exact counts") {
    auto pairs = fixture_pairs(12, 9);
    auto endpoint = scripted_judge(longer_wins);
    auto report = contrast_accuracy(pairs, *endpoint, default_rubric(RubricKind::contrast_3way),
                                    options_of(12, true));
    std::string json_text = accuracy_report_to_json(report);
    CHECK(contains(json_text, "\"wins\": 9"));
    CHECK(contains(json_text, "\"losses\": 3"));
    std::string text = accuracy_report_to_text(report);
    CHECK(contains(text, "overall"));
}
