"""Local recommendation knowledge base: three advice sections per class.

Default provider when no remote recommendation endpoint is configured (or the
remote one fails). Every class in the roster has a cause, immediate steps, and
long-term control entry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classes import CLASS_NAMES
from .errors import CaneError


@dataclass(frozen=True)
class Recommendation:
    disease: str
    cause: str
    immediate_steps: str
    long_term_control: str
    source: str = "local"

    def to_dict(self) -> dict:
        return {
            "disease": self.disease,
            "sections": {
                "cause": self.cause,
                "immediate_steps": self.immediate_steps,
                "long_term_control": self.long_term_control,
            },
            "source": self.source,
        }


_KB: dict[str, tuple[str, str, str]] = {
    "Banded Chlorosis": (
        "Banded chlorosis appears as pale yellow transverse bands on the leaf blade, "
        "usually triggered by cold injury or transient nutrient uptake disruption "
        "rather than a pathogen.",
        "Check soil moisture and recent temperature dips; avoid spraying fungicide, "
        "as the banding is physiological. Mark affected stools and monitor whether "
        "new leaves emerge normal.",
        "Maintain balanced fertilization (especially iron and manganese), plant "
        "cold-tolerant varieties in frost-prone plots, and avoid waterlogging during "
        "cool spells.",
    ),
    "Brown Rust": (
        "Brown rust is caused by the fungus Puccinia melanocephala; orange-brown "
        "pustules form in rows on the lower leaf surface and release wind-borne spores.",
        "Remove and destroy heavily infected leaves, and apply a triazole or "
        "strobilurin fungicide if pustules are spreading up the canopy.",
        "Grow rust-resistant varieties, avoid excessive nitrogen, and maintain row "
        "spacing that lets the canopy dry quickly after rain.",
    ),
    "Brown Spot": (
        "Brown spot is caused by the fungus Cercospora longipes; oval reddish-brown "
        "lesions with yellow halos develop on older leaves under prolonged leaf wetness.",
        "Strip and burn badly spotted lower leaves and improve field drainage; a "
        "protective copper or mancozeb spray can limit further spread.",
        "Rotate with non-host crops, use tolerant varieties, and avoid overhead "
        "irrigation late in the day so leaves dry before nightfall.",
    ),
    "Dried Leaves": (
        "Dried leaves indicate senescence or water stress rather than a specific "
        "pathogen; extended drought, root damage, or severe disease elsewhere in the "
        "stool can all cause drying.",
        "Check soil moisture and the stalk base for borers or rot; if drying is "
        "widespread, irrigate and inspect neighbouring stools for primary disease.",
        "Schedule irrigation to avoid prolonged drought stress, detrash dead leaves "
        "to reduce pest shelter, and keep records to distinguish stress from disease.",
    ),
    "Eye Spot": (
        "Eye spot is caused by the fungus Bipolaris sacchari (formerly "
        "Helminthosporium sacchari); lesions are elongated with red centres ringed by "
        "narrow yellow chlorotic tissue, and reddish-brown streaks may run toward the "
        "leaf tip.",
        "Remove heavily lesioned leaves, avoid overhead irrigation during cool humid "
        "weather, and apply a protective fungicide if streaking reaches young leaves.",
        "Plant resistant cultivars (most commercial varieties carry natural "
        "resistance), balance nitrogen use, and avoid low-lying humid plots for "
        "susceptible varieties.",
    ),
    "Grassy Shoot": (
        "Grassy shoot disease is caused by a phytoplasma spread by leafhoppers and "
        "infected setts; it produces many thin, pale, grass-like tillers that never "
        "form millable cane.",
        "Rogue out and destroy affected stools including roots, and control "
        "leafhopper vectors in and around the plot.",
        "Use disease-free setts from certified nurseries, treat setts with moist hot "
        "air (54C for 2-3 h), and monitor ratoon crops where the disease builds up.",
    ),
    "Healthy": (
        "No disease detected: the leaf shows uniform green colour without lesions, "
        "pustules, streaks, or chlorotic banding.",
        "No treatment needed. Continue routine scouting, especially after rain and "
        "during humid periods when fungal diseases establish.",
        "Keep using clean planting material, balanced fertilization, and regular "
        "field monitoring so any future infection is caught early.",
    ),
    "Mosaic": (
        "Mosaic is caused by sugarcane mosaic virus (or related potyviruses), spread "
        "by aphids and infected setts; leaves show irregular light and dark green "
        "patterns, most visible on young leaves.",
        "Remove symptomatic stools, control aphid populations, and do not take "
        "planting material from an affected field.",
        "Plant virus-free, certified setts of tolerant varieties and manage grassy "
        "weed hosts that harbour the virus and its vectors.",
    ),
    "Pokkah Boeng": (
        "Pokkah boeng is caused by Fusarium species (mainly Fusarium moniliforme); "
        "young leaves emerge twisted, wrinkled and chlorotic at the base, and severe "
        "cases show top rot.",
        "Cut out and destroy affected tops, and spray a systemic fungicide such as "
        "carbendazim when malformation is spreading during the rainy season.",
        "Choose tolerant varieties, avoid dense waterlogged stands, and keep potash "
        "nutrition adequate since the disease favours lush unbalanced growth.",
    ),
    "Red Rot": (
        "Red rot is caused by the fungus Colletotrichum falcatum. It spreads through "
        "infected setts, soil, and irrigation water; internally the stalk shows red "
        "tissue with white transverse patches and can smell alcoholic.",
        "Uproot and burn infected clumps immediately, stop irrigation water flowing "
        "from the affected patch to healthy areas, and do not use cane from the field "
        "as planting material.",
        "Plant resistant varieties, treat setts with fungicide and hot water before "
        "planting, rotate out of sugarcane for at least one season in badly infested "
        "fields, and ensure good drainage.",
    ),
    "Red Leaf Spot": (
        "Red leaf spot is caused by the fungus Dimeriella sacchari; it starts as "
        "small red spots (0.5-1.0 mm) that merge into larger lesions, especially "
        "toward the leaf tip, and can reduce sucrose content.",
        "Detrash and destroy spotted leaves, and apply a protective fungicide during "
        "favourable (warm, wet) weather to protect new growth.",
        "Use less susceptible varieties, avoid excessive overhead moisture, and "
        "monitor closely in seasons with prolonged leaf wetness.",
    ),
    "Ring Spot": (
        "Ring spot is caused by the fungus Leptosphaeria sacchari; small oval spots "
        "enlarge into lesions with reddish-brown borders, mainly on ageing leaves, "
        "and spread by wind- and rain-borne spores.",
        "Remove heavily affected older leaves; fungicide is rarely justified since "
        "the disease mostly attacks senescing tissue, but confirm the diagnosis "
        "before spraying.",
        "Maintain balanced nutrition and field sanitation; remove crop residues that "
        "carry the fungus between seasons.",
    ),
    "Rust": (
        "Rust on sugarcane is caused by Puccinia species; elongated yellow flecks "
        "turn into brown pustules that rupture and release powdery spores, reducing "
        "photosynthetic area.",
        "Apply a recommended fungicide at first pustule appearance if the variety is "
        "susceptible, and avoid moving through wet infected fields to limit spore "
        "spread.",
        "Switch to rust-resistant varieties, balance nitrogen, and promote airflow "
        "in the canopy through proper spacing and detrashing.",
    ),
    "Sett Rot": (
        "Sett rot (pineapple disease) is caused by Ceratocystis paradoxa entering "
        "through cut ends of setts; rotting tissue turns black and smells of ripe "
        "pineapple, and germination fails.",
        "Do not plant affected setts; dip remaining setts in a fungicide solution "
        "before planting and replant gaps with treated material.",
        "Use fresh, well-matured setts, treat cut ends with fungicide, plant into "
        "warm well-drained soil, and avoid deep planting in wet weather.",
    ),
    "Smut": (
        "Smut is caused by the fungus Sporisorium scitamineum; infected shoots "
        "produce a characteristic black whip-like structure full of spores and tiller "
        "excessively with thin stalks.",
        "Cut out smut whips inside a bag (to stop spore release), remove the whole "
        "affected stool, and burn the material away from the field.",
        "Plant resistant varieties, treat setts with hot water (52C for 30 min), "
        "and avoid ratooning heavily infected fields.",
    ),
    "Viral Disease": (
        "General viral infections (e.g. streak or fiji-type viruses) are transmitted "
        "by insect vectors and infected planting material; symptoms include streaking, "
        "distortion, and stunting.",
        "Remove symptomatic plants, control vector insects, and isolate the affected "
        "area from nursery material.",
        "Source certified virus-free setts, manage vector populations across seasons, "
        "and monitor surrounding grasses that can act as virus reservoirs.",
    ),
    "Yellow Leaf": (
        "Yellow leaf disease is caused by sugarcane yellow leaf virus, spread by "
        "aphids and infected setts; the midrib yellows first, then the lamina, while "
        "the rest of the plant may look normal until late in the season.",
        "Confirm midrib yellowing is not nitrogen deficiency, rogue heavily affected "
        "stools, and control aphid colonies on the underside of leaves.",
        "Plant virus-tested tissue-culture material, monitor aphids from early "
        "growth, and avoid taking setts from fields with a yellowing history.",
    ),
}

assert set(_KB) == set(CLASS_NAMES)


def recommend(disease: str) -> Recommendation:
    """Three-section advice for a roster class; raises for unknown names."""
    if disease not in _KB:
        raise CaneError(f"unknown disease {disease!r}")
    cause, now, later = _KB[disease]
    return Recommendation(disease, cause, now, later)
