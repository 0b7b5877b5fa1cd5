"""Sort JSON files."""

from glob import glob
import json

# Load strings.json
strings = json.load(open("acstab/strings.json"))

# Sort keys
open("acstab/strings.json", "w").write(json.dumps(strings, indent=2, sort_keys=True) + "\n")

for path in sorted(glob("config/*.json")):
    config = json.load(open(path))
    open(path, "w").write(json.dumps(config, indent=2, sort_keys=True) + "\n")
