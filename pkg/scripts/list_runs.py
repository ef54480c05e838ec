"""
List recorded runs from the run registry
"""
import sys
import os

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from commands.report import format_runs, list_runs


def main(limit=50):
    try:
        records = list_runs(limit)
        print(format_runs(records), end="")
    except Exception as e:
        print(f"Error: {e}")
        import traceback
        traceback.print_exc()


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 50)
