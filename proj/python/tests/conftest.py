import os
import sys

# ctest points this at build/python; an editable install's finder would otherwise shadow it
build = os.environ.get("LABYRINTH_PYTHON_DIR")
if build:
    sys.meta_path[:] = [f for f in sys.meta_path if "labyrinth" not in type(f).__module__]
    sys.path.insert(0, build)
