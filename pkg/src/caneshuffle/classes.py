"""Canonical 17-class roster of the combined sugarcane leaf corpus."""

# Fixed roster order, used everywhere a per-class table or the service's
# /classes endpoint appears.
CLASS_NAMES = [
    "Banded Chlorosis",
    "Brown Rust",
    "Brown Spot",
    "Dried Leaves",
    "Eye Spot",
    "Grassy Shoot",
    "Healthy",
    "Mosaic",
    "Pokkah Boeng",
    "Red Rot",
    "Red Leaf Spot",
    "Ring Spot",
    "Rust",
    "Sett Rot",
    "Smut",
    "Viral Disease",
    "Yellow Leaf",
]

NUM_CLASSES = len(CLASS_NAMES)

CLASS_INDEX = {name: i for i, name in enumerate(CLASS_NAMES)}
