#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <tuple>

#include "test_support.hpp"

using namespace avsig;
using testsupport::TempDir;
using testsupport::make_dataset;
using testsupport::write_file;

TEST_CASE("delimited loader builds dense indices in first-appearance order") {
    TempDir tmp;
    write_file(tmp.file("d.csv"),
               "app_id,engine_id,raw_signature\n"
               "app1,engineA,Adware/StartApp.A\n"
               "app1,engineB,Trojan.Foo\n"
               "app2,engineA,Adware/StartApp.A\n");
    Dataset ds = load_detections(tmp.file("d.csv"), InputFormat::Delimited);
    REQUIRE(ds.n_records() == 3);
    REQUIRE(ds.n_apps() == 2);
    REQUIRE(ds.n_engines() == 2);
    CHECK(ds.app_ids() == std::vector<std::string>{"app1", "app2"});
    CHECK(ds.engine_ids() == std::vector<std::string>{"engineA", "engineB"});
    CHECK(ds.app_index("app1") == 0);
    CHECK(ds.app_index("app2") == 1);
    CHECK(ds.engine_index("engineB") == 1);
    CHECK(ds.app_index("nope") == -1);
    CHECK(ds.app_index_of_record(2) == 1);
    CHECK(ds.engine_index_of_record(1) == 1);
    CHECK(ds.duplicates_dropped() == 0);
}

TEST_CASE("loader reports the offending line for missing fields") {
    TempDir tmp;
    write_file(tmp.file("bad.csv"),
               "app_id,engine_id,raw_signature\n"
               "app1,engineA,Sig.One\n"
               "app2,engineB,\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("bad.csv"), InputFormat::Delimited),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 3") &&
                               Catch::Matchers::ContainsSubstring("raw_signature")));

    write_file(tmp.file("bad2.csv"),
               "app_id,engine_id,raw_signature\n"
               ",engineA,Sig.One\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("bad2.csv"), InputFormat::Delimited),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 2") &&
                               Catch::Matchers::ContainsSubstring("app_id")));
}

TEST_CASE("loader requires the three core header columns") {
    TempDir tmp;
    write_file(tmp.file("h.csv"), "app_id,signature\napp1,Sig\n");
    REQUIRE_THROWS_AS(load_detections(tmp.file("h.csv"), InputFormat::Delimited),
                      ValidationError);
}

TEST_CASE("header columns may appear in any order and quoting is honored") {
    TempDir tmp;
    write_file(tmp.file("q.csv"),
               "raw_signature,app_id,engine_id\n"
               "\"Family, variant (x)\",app1,engineA\n");
    Dataset ds = load_detections(tmp.file("q.csv"), InputFormat::Delimited);
    REQUIRE(ds.n_records() == 1);
    CHECK(ds.records()[0].raw_signature == "Family, variant (x)");
    CHECK(ds.records()[0].app_id == "app1");
}

TEST_CASE("exact duplicate triples are dropped and counted") {
    TempDir tmp;
    write_file(tmp.file("dup.csv"),
               "app_id,engine_id,raw_signature\n"
               "app1,engineA,Sig.One\n"
               "app1,engineA,Sig.One\n"
               "app1,engineA,Sig.Two\n"
               "app1,engineB,Sig.One\n");
    Dataset ds = load_detections(tmp.file("dup.csv"), InputFormat::Delimited);
    CHECK(ds.n_records() == 3);
    CHECK(ds.duplicates_dropped() == 1);

    // Reference: set-based dedup must agree with what the loader kept.
    std::set<std::tuple<std::string, std::string, std::string>> expect = {
        {"app1", "engineA", "Sig.One"},
        {"app1", "engineA", "Sig.Two"},
        {"app1", "engineB", "Sig.One"},
    };
    std::set<std::tuple<std::string, std::string, std::string>> got;
    for (const auto& r : ds.records()) got.insert({r.app_id, r.engine_id, r.raw_signature});
    CHECK(got == expect);
}

TEST_CASE("empty input is an error unless explicitly allowed") {
    TempDir tmp;
    write_file(tmp.file("empty.csv"), "app_id,engine_id,raw_signature\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("empty.csv"), InputFormat::Delimited),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("no records")));
    Dataset ds = load_detections(tmp.file("empty.csv"), InputFormat::Delimited, ',', true);
    CHECK(ds.n_records() == 0);
    CHECK(ds.n_apps() == 0);

    write_file(tmp.file("zero.csv"), "");
    REQUIRE_THROWS_AS(load_detections(tmp.file("zero.csv"), InputFormat::Delimited),
                      ValidationError);
    Dataset dz = load_detections(tmp.file("zero.csv"), InputFormat::Delimited, ',', true);
    CHECK(dz.n_records() == 0);
}

TEST_CASE("missing input file names the path") {
    REQUIRE_THROWS_MATCHES(load_detections("/nonexistent/x.csv", InputFormat::Delimited),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("/nonexistent/x.csv")));
}

TEST_CASE("json-lines loader parses records and validates types") {
    TempDir tmp;
    write_file(tmp.file("d.jsonl"),
               R"({"app_id":"app1","engine_id":"engineA","raw_signature":"Adware/X.A"})"
               "\n\n"
               R"({"app_id":"app2","engine_id":"engineB","raw_signature":"Troj","scan_date":"2016-03-04"})"
               "\n");
    Dataset ds = load_detections(tmp.file("d.jsonl"), InputFormat::JsonLines);
    REQUIRE(ds.n_records() == 2);
    CHECK(ds.records()[0].app_id == "app1");
    CHECK_FALSE(ds.records()[0].scan_date.has_value());
    REQUIRE(ds.records()[1].scan_date.has_value());
    CHECK(*ds.records()[1].scan_date == "2016-03-04");

    write_file(tmp.file("bad.jsonl"),
               R"({"app_id":"app1","engine_id":"engineA"})"
               "\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("bad.jsonl"), InputFormat::JsonLines),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 1") &&
                               Catch::Matchers::ContainsSubstring("raw_signature")));

    write_file(tmp.file("syntax.jsonl"), "{not json}\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("syntax.jsonl"), InputFormat::JsonLines),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 1")));
}

TEST_CASE("malformed scan_date is rejected with its line number") {
    TempDir tmp;
    write_file(tmp.file("d.csv"),
               "app_id,engine_id,raw_signature,scan_date\n"
               "app1,engineA,Sig.One,2016-01-15\n"
               "app2,engineA,Sig.Two,15/01/2016\n");
    REQUIRE_THROWS_MATCHES(load_detections(tmp.file("d.csv"), InputFormat::Delimited),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 3") &&
                               Catch::Matchers::ContainsSubstring("scan_date")));
}

TEST_CASE("input format names parse to the two supported formats") {
    CHECK(parse_input_format("delimited") == InputFormat::Delimited);
    CHECK(parse_input_format("csv") == InputFormat::Delimited);
    CHECK(parse_input_format("json-lines") == InputFormat::JsonLines);
    CHECK(parse_input_format("jsonl") == InputFormat::JsonLines);
    REQUIRE_THROWS_AS(parse_input_format("xml"), ValidationError);
}

TEST_CASE("engine aliases are assigned by descending detection count") {
    // x has 3 detections, y has 1: x must become AV1, y AV2.
    auto ds = make_dataset({{"a1", "x", "S1"},
                            {"a2", "x", "S2"},
                            {"a3", "x", "S3"},
                            {"a1", "y", "S1"}});
    auto [aliased, amap] = anonymize_engines(ds, "salt");
    REQUIRE(amap.size() == 2);
    CHECK(amap.at("x") == "AV1");
    CHECK(amap.at("y") == "AV2");
    for (const auto& r : aliased.records())
        CHECK((r.engine_id == "AV1" || r.engine_id == "AV2"));
    CHECK(aliased.n_records() == ds.n_records());
    CHECK(aliased.app_ids() == ds.app_ids());
}

TEST_CASE("a single engine is always AV1") {
    auto ds = make_dataset({{"a1", "only", "S1"}, {"a2", "only", "S2"}});
    auto [aliased, amap] = anonymize_engines(ds, "whatever");
    CHECK(amap.at("only") == "AV1");
    CHECK(aliased.engine_ids() == std::vector<std::string>{"AV1"});
}

TEST_CASE("alias assignment is deterministic per salt and stable across reruns") {
    // Two engines with identical counts: the salted fingerprint breaks the tie.
    auto ds = make_dataset({{"a1", "left", "S1"},
                            {"a2", "left", "S2"},
                            {"a1", "right", "S3"},
                            {"a2", "right", "S4"}});
    auto [r1, m1] = anonymize_engines(ds, "salt-one");
    auto [r2, m2] = anonymize_engines(ds, "salt-one");
    CHECK(m1 == m2);  // same salt, same assignment

    auto [r3, m3] = anonymize_engines(ds, "salt-two");
    CHECK(m3.size() == 2);  // may or may not equal m1; must still be a bijection
    std::set<std::string> aliases;
    for (const auto& [orig, alias] : m3) aliases.insert(alias);
    CHECK(aliases == std::set<std::string>{"AV1", "AV2"});
}

TEST_CASE("re-aliasing an aliased dataset is a no-op") {
    auto ds = make_dataset({{"a1", "engX", "S1"},
                            {"a2", "engX", "S2"},
                            {"a1", "engY", "S3"},
                            {"a2", "engY", "S4"},
                            {"a3", "engZ", "S5"}});
    auto [once, m1] = anonymize_engines(ds, "pepper");
    auto [twice, m2] = anonymize_engines(once, "pepper");
    REQUIRE(once.n_records() == twice.n_records());
    for (size_t i = 0; i < once.n_records(); ++i) {
        CHECK(once.records()[i].engine_id == twice.records()[i].engine_id);
        CHECK(once.records()[i].app_id == twice.records()[i].app_id);
    }
    // The second pass maps every alias to itself.
    for (const auto& [orig, alias] : m2) CHECK(orig == alias);
}

TEST_CASE("summary statistics match the worked two-app example") {
    // app1 has 1 detection, app2 has 3: mean 2.0, histogram {1:1, 3:1}.
    auto ds = make_dataset({{"app1", "e1", "S1"},
                            {"app2", "e1", "S2"},
                            {"app2", "e2", "S3"},
                            {"app2", "e3", "S4"}});
    SummaryStats s = dataset_summary(ds);
    CHECK(s.n_apps == 2);
    CHECK(s.n_engines == 3);
    CHECK(s.n_signatures == 4);
    CHECK(s.mean_detections_per_app == Catch::Approx(2.0));
    CHECK(s.sd_detections_per_app == Catch::Approx(1.0));  // population sd of {1, 3}
    REQUIRE(s.detections_histogram.size() == 2);
    CHECK(s.detections_histogram.at(1) == 1);
    CHECK(s.detections_histogram.at(3) == 1);
    CHECK(s.per_engine_counts.at("e1") == 2);
    CHECK(s.per_engine_counts.at("e2") == 1);
}

TEST_CASE("uniform corpus has zero spread and a single histogram bin") {
    auto ds = make_dataset({{"a1", "e1", "S1"}, {"a2", "e1", "S2"}, {"a3", "e1", "S3"}});
    SummaryStats s = dataset_summary(ds);
    CHECK(s.mean_detections_per_app == Catch::Approx(1.0));
    CHECK(s.sd_detections_per_app == Catch::Approx(0.0));
    REQUIRE(s.detections_histogram.size() == 1);
    CHECK(s.detections_histogram.at(1) == 3);
}

TEST_CASE("summary of an empty dataset is an error") {
    Dataset empty;
    REQUIRE_THROWS_AS(dataset_summary(empty), ValidationError);
}

TEST_CASE("summary statistics agree with a direct recount on synthetic data") {
    Dataset ds = synth_detections({120, 8, 900, 2024, true});
    SummaryStats s = dataset_summary(ds);

    // Recount from the raw records.
    std::map<std::string, size_t> per_app, per_engine;
    for (const auto& r : ds.records()) {
        ++per_app[r.app_id];
        ++per_engine[r.engine_id];
    }
    CHECK(s.n_apps == per_app.size());
    CHECK(s.n_engines == per_engine.size());
    CHECK(s.n_signatures == ds.n_records());

    double mean = 0.0;
    for (const auto& [id, c] : per_app) mean += static_cast<double>(c);
    mean /= static_cast<double>(per_app.size());
    double var = 0.0;
    for (const auto& [id, c] : per_app) {
        double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    var /= static_cast<double>(per_app.size());
    CHECK(s.mean_detections_per_app == Catch::Approx(mean).epsilon(1e-12));
    CHECK(s.sd_detections_per_app == Catch::Approx(std::sqrt(var)).epsilon(1e-12));

    std::map<size_t, size_t> hist;
    for (const auto& [id, c] : per_app) ++hist[c];
    CHECK(s.detections_histogram == hist);
    for (const auto& [eng, c] : per_engine) CHECK(s.per_engine_counts.at(eng) == c);

    // Histogram mass accounts for every app exactly once.
    size_t mass = 0;
    for (const auto& [k, n] : s.detections_histogram) mass += n;
    CHECK(mass == s.n_apps);
    // Total signatures decompose over the histogram.
    size_t total = 0;
    for (const auto& [k, n] : s.detections_histogram) total += k * n;
    CHECK(total == s.n_signatures);
}

TEST_CASE("synthetic generator is deterministic and respects its bounds") {
    SynthConfig cfg{60, 6, 400, 7, true};
    Dataset a = synth_detections(cfg);
    Dataset b = synth_detections(cfg);
    REQUIRE(a.n_records() == 400);
    REQUIRE(b.n_records() == 400);
    for (size_t i = 0; i < a.n_records(); ++i) {
        CHECK(a.records()[i].app_id == b.records()[i].app_id);
        CHECK(a.records()[i].engine_id == b.records()[i].engine_id);
        CHECK(a.records()[i].raw_signature == b.records()[i].raw_signature);
    }
    CHECK(a.n_apps() <= 60);
    CHECK(a.n_engines() <= 6);
    CHECK(a.duplicates_dropped() == 0);  // generator never emits duplicates

    // Distinctness: no triple repeats.
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    for (const auto& r : a.records())
        CHECK(seen.insert({r.app_id, r.engine_id, r.raw_signature}).second);

    REQUIRE_THROWS_AS(synth_detections({0, 5, 10, 1, false}), ValidationError);
    REQUIRE_THROWS_AS(synth_detections({2, 2, 1000000, 1, false}), ValidationError);
}
