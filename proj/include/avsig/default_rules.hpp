#pragma once

#include <sstream>

#include "avsig/rules.hpp"

namespace avsig {

// Default normalization rule set: 41 classes in three categories, ordered
// by specificity with a final catch-all. Matching happens against the
// lower-cased, dot-joined cleaned signature, so the patterns are lowercase.
// The same table ships as data/default_rules.tsv for editing.
inline constexpr const char* kDefaultRulesTsv =
    "# rank\tpattern\tclass\tcategory\n"
    "1\t.*a[ir]*push?.*\tAirpush\tAdware\n"
    "2\t.*leadbolt.*\tLeadbolt\tAdware\n"
    "3\t.*revmob.*\tRevmob\tAdware\n"
    "4\t.*startapp.*\tStartApp\tAdware\n"
    "5\t[os]*apperhand.*|.*counterclank.*\tApperhand/Counterclank\tAdware\n"
    "6\t.*kuguo.*\tKuguo\tAdware\n"
    "7\twapsx?\tWAPS\tAdware\n"
    "8\t.*dowgin.*|dogwin\tDogwin\tAdware\n"
    "9\t.*cauly.*\tCauly\tAdware\n"
    "10\t[os]*wooboo\tWooboo\tAdware\n"
    "11\t[os]*mobwin\tMobwin\tAdware\n"
    "12\t.*droidkungfu.*\tDroidKungFu\tAdware\n"
    "13\t.*plankton.*\tPlankton\tAdware\n"
    "14\t[os]*you?mi\tYoumi\tAdware\n"
    "15\t[osoneclick]*fraud\tFraud\tAdware\n"
    "16\tmultiads\tMultiads\tAdware\n"
    "17\t.*adware.*|ad.+\tAdware (gen)\tAdware\n"
    "18\triskware\tRiskware\tHarmfulThreats\n"
    "19\tspr\tSPR\tHarmfulThreats\n"
    "20\t.*deng.*\tDeng\tHarmfulThreats\n"
    "21\t.*smsreg\tSMSreg\tHarmfulThreats\n"
    "22\t[os]*covav?\tCova\tHarmfulThreats\n"
    "23\t.*denofow.*\tDenofow\tHarmfulThreats\n"
    "24\t[os]*fakeflash\tFakeFlash\tHarmfulThreats\n"
    "25\t.*fakeapp.*\tFakeApp\tHarmfulThreats\n"
    "26\t.*fakeinst.*\tFakeInst\tHarmfulThreats\n"
    "27\t.*appinventor.*\tAppinventor\tHarmfulThreats\n"
    "28\t.*swf.*\tSWF\tHarmfulThreats\n"
    "29\t.*troj.*\tTrojan (gen)\tHarmfulThreats\n"
    "30\t.*mobi.*\tMobidash\tHarmfulThreats\n"
    "31\t.*spy.*\tSpy\tHarmfulThreats\n"
    "32\t.*gin[ger]*master\tGingermaster\tHarmfulThreats\n"
    "33\tunclassifiedmalware\tUnclassifiedMalware\tUnknownGeneric\n"
    "34\t.*virus.*\tVirus\tUnknownGeneric\n"
    "35\t.*heur.*\tHeur\tUnknownGeneric\n"
    "36\t.*gen.*\tGEN\tUnknownGeneric\n"
    "37\t[osgen]*pua\tPUA\tUnknownGeneric\n"
    "38\t[ws]*reputation\tReputation\tUnknownGeneric\n"
    "39\t.*applicunwnt.*\tAppUnwanted\tUnknownGeneric\n"
    "40\t.*artemi.*\tArtemis\tUnknownGeneric\n"
    "41\t.*\tOther\tUnknownGeneric\n";

inline RuleSet default_ruleset() {
    std::istringstream in(kDefaultRulesTsv);
    return RuleSet::parse(in, "<default rules>");
}

} // namespace avsig
