#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "test_support.hpp"

using namespace avsig;
using testsupport::make_dataset;

namespace {

NormalizedDetection make_nd(const std::string& app, int app_idx, const std::string& engine,
                            int engine_idx, const std::string& cls, Category cat,
                            int rank = 1) {
    NormalizedDetection d;
    d.app_id = app;
    d.engine_id = engine;
    d.app_idx = app_idx;
    d.engine_idx = engine_idx;
    d.class_name = cls;
    d.category = cat;
    d.rule_rank = rank;
    return d;
}

/// Phi coefficient from the 2x2 contingency table; the reference formula for
/// correlations of 0/1 columns.
double phi_of(const std::vector<std::vector<double>>& M, size_t i, size_t j) {
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (const auto& row : M) {
        bool a = row[i] != 0.0, b = row[j] != 0.0;
        if (a && b) ++n11;
        else if (a) ++n10;
        else if (b) ++n01;
        else ++n00;
    }
    double denom = (n11 + n10) * (n01 + n00) * (n11 + n01) * (n10 + n00);
    if (denom == 0.0) return 0.0;
    return (n11 * n00 - n10 * n01) / std::sqrt(denom);
}

} // namespace

TEST_CASE("engine matrix marks which engines flagged which apps") {
    auto ds = make_dataset({{"a1", "e1", "S1"}, {"a1", "e2", "S2"}});
    IndicatorMatrix A = build_engine_matrix(ds);
    REQUIRE(A.rows() == 1);
    REQUIRE(A.cols() == 2);
    CHECK(A.get(0, 0));
    CHECK(A.get(0, 1));
    CHECK(A.nnz() == 2);
    CHECK(A.row_labels() == std::vector<std::string>{"a1"});
    CHECK(A.col_labels() == std::vector<std::string>{"e1", "e2"});
    CHECK(A.row_sums() == std::vector<size_t>{2});
    CHECK(A.col_sums() == std::vector<size_t>{1, 1});
    CHECK(A.density() == Catch::Approx(1.0));
}

TEST_CASE("repeat detections by the same engine collapse to one cell") {
    auto ds = make_dataset({{"a1", "e1", "S1"}, {"a1", "e1", "S2"}, {"a2", "e1", "S1"}});
    IndicatorMatrix A = build_engine_matrix(ds);
    CHECK(A.rows() == 2);
    CHECK(A.cols() == 1);
    CHECK(A.nnz() == 2);  // (a1, e1) once despite two signatures
    CHECK(A.row_sums() == std::vector<size_t>{1, 1});
}

TEST_CASE("engine matrix of an empty dataset is empty") {
    Dataset empty;
    IndicatorMatrix A = build_engine_matrix(empty);
    CHECK(A.rows() == 0);
    CHECK(A.cols() == 0);
    CHECK(A.nnz() == 0);
    CHECK(A.density() == 0.0);
}

TEST_CASE("class matrix deduplicates repeated classes per app") {
    RuleSet rs = default_ruleset();
    std::vector<NormalizedDetection> nd = {
        make_nd("a1", 0, "e1", 0, "StartApp", Category::Adware, 4),
        make_nd("a1", 0, "e2", 1, "StartApp", Category::Adware, 4),
        make_nd("a1", 0, "e3", 2, "Youmi", Category::Adware, 14),
    };
    IndicatorMatrix B = build_class_matrix(nd, rs);
    REQUIRE(B.rows() == 1);
    REQUIRE(B.cols() == 41);  // every class column exists even when unmatched
    CHECK(B.nnz() == 2);
    CHECK(B.col_labels() == rs.class_names());
    int col_startapp = -1, col_youmi = -1;
    for (size_t j = 0; j < B.cols(); ++j) {
        if (B.col_labels()[j] == "StartApp") col_startapp = static_cast<int>(j);
        if (B.col_labels()[j] == "Youmi") col_youmi = static_cast<int>(j);
    }
    REQUIRE(col_startapp >= 0);
    REQUIRE(col_youmi >= 0);
    CHECK(B.get(0, col_startapp));
    CHECK(B.get(0, col_youmi));
    CHECK(B.row_labels() == std::vector<std::string>{"a1"});
}

TEST_CASE("class matrix rejects classes missing from the rule set") {
    RuleSet rs = default_ruleset();
    std::vector<NormalizedDetection> nd = {
        make_nd("a1", 0, "e1", 0, "NoSuchClass", Category::Adware)};
    REQUIRE_THROWS_MATCHES(build_class_matrix(nd, rs), ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("NoSuchClass")));
}

TEST_CASE("category counts tally per-app detections by category") {
    std::vector<NormalizedDetection> nd = {
        make_nd("a1", 0, "e1", 0, "StartApp", Category::Adware),
        make_nd("a1", 0, "e2", 1, "Airpush", Category::Adware),
        make_nd("a1", 0, "e3", 2, "Other", Category::UnknownGeneric),
        make_nd("a2", 1, "e1", 0, "Trojan (gen)", Category::HarmfulThreats),
    };
    CategoryCountMatrix D = build_category_counts(nd);
    REQUIRE(D.rows == 2);
    CHECK(D.counts[0] == std::array<long, 3>{2, 0, 1});
    CHECK(D.counts[1] == std::array<long, 3>{0, 1, 0});
    CHECK(D.row_labels == std::vector<std::string>{"a1", "a2"});

    // Row sums equal each app's record count.
    CHECK(D.counts[0][0] + D.counts[0][1] + D.counts[0][2] == 3);

    std::vector<NormalizedDetection> none;
    CHECK(build_category_counts(none).rows == 0);
}

TEST_CASE("matrix builders agree with a direct recount on synthetic data") {
    RuleSet rs = default_ruleset();
    Stopwords sw = default_stopwords();
    Dataset ds = synth_detections({80, 10, 700, 99, false});
    auto nd = normalize_dataset(ds, rs, sw);

    IndicatorMatrix A = build_engine_matrix(ds);
    IndicatorMatrix B = build_class_matrix(nd, rs);
    CategoryCountMatrix D = build_category_counts(nd);

    REQUIRE(A.rows() == ds.n_apps());
    REQUIRE(A.cols() == ds.n_engines());
    REQUIRE(B.rows() == ds.n_apps());
    REQUIRE(D.rows == ds.n_apps());

    // Recount straight from the records.
    std::set<std::pair<int, int>> a_cells;
    for (size_t i = 0; i < ds.n_records(); ++i)
        a_cells.insert({ds.app_index_of_record(i), ds.engine_index_of_record(i)});
    CHECK(A.nnz() == a_cells.size());
    for (auto [r, c] : a_cells) CHECK(A.get(r, c));

    std::map<std::string, int> col_of;
    auto classes = rs.class_names();
    for (size_t j = 0; j < classes.size(); ++j) col_of[classes[j]] = static_cast<int>(j);
    std::set<std::pair<int, int>> b_cells;
    std::vector<std::array<long, 3>> d_ref(ds.n_apps(), {0, 0, 0});
    for (const auto& d : nd) {
        b_cells.insert({d.app_idx, col_of.at(d.class_name)});
        ++d_ref[d.app_idx][static_cast<int>(d.category)];
    }
    CHECK(B.nnz() == b_cells.size());
    for (auto [r, c] : b_cells) CHECK(B.get(r, c));
    for (size_t i = 0; i < ds.n_apps(); ++i) CHECK(D.counts[i] == d_ref[i]);

    // Row sums of D decompose the record count.
    long total = 0;
    for (const auto& row : D.counts) total += row[0] + row[1] + row[2];
    CHECK(static_cast<size_t>(total) == ds.n_records());
}

TEST_CASE("matrices built from normalized detections ignore record order") {
    RuleSet rs = default_ruleset();
    Stopwords sw = default_stopwords();
    Dataset ds = synth_detections({30, 6, 200, 5, false});
    auto nd = normalize_dataset(ds, rs, sw);
    auto shuffled = nd;
    std::mt19937_64 rng(17);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);

    IndicatorMatrix B1 = build_class_matrix(nd, rs);
    IndicatorMatrix B2 = build_class_matrix(shuffled, rs);
    CHECK(B1.cells() == B2.cells());
    CHECK(B1.row_labels() == B2.row_labels());

    CategoryCountMatrix D1 = build_category_counts(nd);
    CategoryCountMatrix D2 = build_category_counts(shuffled);
    CHECK(D1.counts == D2.counts);
}

TEST_CASE("duplicated columns correlate at exactly 1") {
    std::vector<std::vector<double>> M = {{1, 1}, {0, 0}, {1, 1}, {0, 0}};
    CorrelationMatrix C = pearson_correlation(M, {"x", "copy"});
    CHECK(C.values[0][1] == Catch::Approx(1.0));
    CHECK(C.values[0][0] == 1.0);
    CHECK(C.labels == std::vector<std::string>{"x", "copy"});
}

TEST_CASE("perfectly opposed indicator columns correlate at -1") {
    std::vector<std::vector<double>> M = {{1, 0}, {1, 0}, {0, 1}, {0, 1}};
    CorrelationMatrix C = pearson_correlation(M);
    CHECK(C.values[0][1] == Catch::Approx(-1.0));
    CHECK(C.values[1][0] == Catch::Approx(-1.0));
}

TEST_CASE("correlation needs at least two rows") {
    std::vector<std::vector<double>> M = {{1, 0}};
    REQUIRE_THROWS_AS(pearson_correlation(M), ValidationError);
    REQUIRE_THROWS_AS(pearson_correlation(std::vector<std::vector<double>>{}),
                      ValidationError);
    std::vector<std::vector<double>> ragged = {{1, 0}, {1}};
    REQUIRE_THROWS_AS(pearson_correlation(ragged), ValidationError);
}

TEST_CASE("zero-variance columns are flagged and zeroed, not NaN") {
    std::vector<std::vector<double>> M = {{1, 1}, {1, 0}, {1, 1}};
    CorrelationMatrix C = pearson_correlation(M, {"const", "var"});
    CHECK(C.zero_variance[0]);
    CHECK_FALSE(C.zero_variance[1]);
    CHECK(C.values[0][1] == 0.0);
    CHECK(C.values[1][0] == 0.0);
    CHECK(C.values[0][0] == 1.0);  // diagonal stays 1 by convention
    for (const auto& row : C.values)
        for (double v : row) CHECK_FALSE(std::isnan(v));
}

TEST_CASE("correlation of 0/1 columns equals the phi coefficient") {
    std::mt19937_64 rng(404);
    std::vector<std::vector<double>> M(60, std::vector<double>(5, 0.0));
    for (auto& row : M)
        for (auto& v : row) v = (rng() % 3 == 0) ? 1.0 : 0.0;
    CorrelationMatrix C = pearson_correlation(M);
    for (size_t i = 0; i < 5; ++i)
        for (size_t j = i + 1; j < 5; ++j) {
            if (C.zero_variance[i] || C.zero_variance[j]) continue;
            CHECK(C.values[i][j] == Catch::Approx(phi_of(M, i, j)).margin(1e-9));
        }
}

TEST_CASE("correlation is invariant to positive affine rescaling") {
    std::mt19937_64 rng(11);
    std::vector<std::vector<double>> M(40, std::vector<double>(3, 0.0));
    for (auto& row : M)
        for (auto& v : row) v = static_cast<double>(rng() % 7);
    auto scaled = M;
    for (auto& row : scaled) {
        row[0] = 3.0 * row[0] + 7.0;
        row[2] = 0.5 * row[2] - 2.0;
    }
    CorrelationMatrix C1 = pearson_correlation(M);
    CorrelationMatrix C2 = pearson_correlation(scaled);
    for (size_t i = 0; i < 3; ++i)
        for (size_t j = 0; j < 3; ++j)
            CHECK(C2.values[i][j] == Catch::Approx(C1.values[i][j]).margin(1e-9));
}

TEST_CASE("correlation matrices are symmetric with unit diagonal and bounded") {
    Dataset ds = synth_detections({50, 8, 400, 21, false});
    CorrelationMatrix C = pearson_correlation(build_engine_matrix(ds));
    REQUIRE(C.size == ds.n_engines());
    for (size_t i = 0; i < C.size; ++i) {
        CHECK(C.values[i][i] == 1.0);
        for (size_t j = 0; j < C.size; ++j) {
            CHECK(C.values[i][j] == C.values[j][i]);
            CHECK(C.values[i][j] <= 1.0);
            CHECK(C.values[i][j] >= -1.0);
        }
    }
    CHECK(C.labels == ds.engine_ids());
}

TEST_CASE("category count correlations carry category labels") {
    std::vector<NormalizedDetection> nd = {
        make_nd("a1", 0, "e1", 0, "StartApp", Category::Adware),
        make_nd("a2", 1, "e1", 0, "Other", Category::UnknownGeneric),
        make_nd("a3", 2, "e1", 0, "Trojan (gen)", Category::HarmfulThreats),
    };
    CorrelationMatrix C = pearson_correlation(build_category_counts(nd));
    CHECK(C.labels ==
          std::vector<std::string>{"Adware", "HarmfulThreats", "UnknownGeneric"});
}

TEST_CASE("detection histogram counts apps by row sum") {
    auto ds = make_dataset({{"a1", "e1", "S1"},
                            {"a2", "e1", "S2"},
                            {"a2", "e2", "S3"},
                            {"a3", "e1", "S4"}});
    IndicatorMatrix A = build_engine_matrix(ds);
    auto h = detection_histogram(A);
    REQUIRE(h.size() == 2);
    CHECK(h.at(1) == 2);
    CHECK(h.at(2) == 1);

    size_t mass = 0;
    for (const auto& [k, n] : h) mass += n;
    CHECK(mass == A.rows());
}

TEST_CASE("class frequency reports column sums keyed by label") {
    RuleSet rs = default_ruleset();
    std::vector<NormalizedDetection> nd = {
        make_nd("a1", 0, "e1", 0, "StartApp", Category::Adware),
        make_nd("a2", 1, "e1", 0, "StartApp", Category::Adware),
        make_nd("a2", 1, "e2", 1, "Youmi", Category::Adware),
    };
    auto freq = class_frequency(build_class_matrix(nd, rs));
    CHECK(freq.at("StartApp") == 2);
    CHECK(freq.at("Youmi") == 1);
    CHECK(freq.at("Airpush") == 0);  // unmatched classes report zero
    CHECK(freq.size() == 41);
}

TEST_CASE("triplet export writes one cell per line") {
    IndicatorMatrix m(2, 2);
    m.set(1, 1);
    m.set(0, 0);
    m.finalize();
    std::ostringstream os;
    write_triplets(os, m);
    CHECK(os.str() == "row,col,value\n0,0,1\n1,1,1\n");
}

TEST_CASE("label export writes rows then columns") {
    std::ostringstream os;
    write_labels(os, {"a"}, {"x", "y"});
    CHECK(os.str() == "kind,index,label\nrow,0,a\ncol,0,x\ncol,1,y\n");
}

TEST_CASE("correlation export is a dense labeled table") {
    CorrelationMatrix C;
    C.size = 2;
    C.labels = {"A", "B"};
    C.values = {{1.0, -0.25}, {-0.25, 1.0}};
    C.zero_variance = {false, false};
    std::ostringstream os;
    write_correlation(os, C);
    CHECK(os.str() == "label,A,B\nA,1,-0.25\nB,-0.25,1\n");
}
