#pragma once

// Shared hand-built passages exercising the documented number/entity/graph
// behaviors. Used by unit tests and the acceptance suite.

namespace ngtest {

inline constexpr const char* kBattleQuestion =
    "At the battle of Caiboaté how many Spanish and Portuguese were injured or "
    "killed?";

inline constexpr const char* kBattlePassage =
    "In 1754 Spanish and Portuguese military forces were dispatched to force the "
    "Guarani to leave the area. Hostilities resumed in 1756 when an army of 3,000 "
    "Spanish, Portuguese, and native auxiliary soldiers under José de Andonaegui "
    "and Freire de Andrade was sent to subdue the Guarani rebels. On February 7, "
    "1756 the leader of the Guarani rebels, Sepé Tiaraju, was killed in a skirmish "
    "with Spanish and Portuguese troops. In the ensuing battle of Caiboaté 1,511 "
    "Guarani were killed and 152 taken prisoner, while 4 Spanish and Portuguese "
    "were killed and about 30 were wounded.";

inline constexpr const char* kBattleGold = "34";  // 4 killed + about 30 wounded

inline constexpr const char* kKickQuestion = "How many yards did Kasay kick?";

inline constexpr const char* kKickPassage =
    "Carolina scored first in the second quarter with kicker John Kasay hitting a "
    "45-yard field goal. The Falcons took the lead with QB Joey Harrington "
    "completing a 69-yard TD pass to WR Roddy White. The Panthers followed up "
    "with QB Jake Delhomme completing a 13-yard TD pass to RB DeShaun Foster. In "
    "the fourth quarter, the Panthers scored again, with Kasay kicking a 49-yard "
    "field goal. The Falcons' Andersen nailed a 25-yard field goal to end the "
    "scoring.";

inline constexpr const char* kKickGold = "94";  // 45 + 49

inline constexpr const char* kAgeQuestion =
    "How many more percentage points are people aged between 20 and 29 compared "
    "to those between 10 and 19?";

inline constexpr const char* kAgePassage =
    "The age distribution in Aigle is as follows: 933 children or 10.7% of the "
    "population are between 0 and 9 years old and 1,137 teenagers or 13.0% are "
    "between 10 and 19. Of the adult population, 1,255 people or 14.3% of the "
    "population are between 20 and 29 years old.";

inline constexpr const char* kAgeGold = "1.3";  // 14.3 - 13.0

}  // namespace ngtest
