from db.init import init_db

if __name__ == "__main__":
    print("Initializing run registry...")
    init_db()
    print("Run registry initialized successfully.")
